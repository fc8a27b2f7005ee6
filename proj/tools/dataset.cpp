#include "dataset.hpp"

#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "capi_util.hpp"

namespace cli {

bool Record::fully_annotated() const {
  for (const std::string& t : tags) {
    if (t == kUnannotated) return false;
  }
  return true;
}

bool Record::has_partial() const { return !fully_annotated(); }

bool Dataset::any_padded() const {
  for (const Record& r : records) {
    if (r.pads > 0) return true;
  }
  return false;
}

bool Dataset::any_partial() const {
  for (const Record& r : records) {
    if (r.has_partial()) return true;
  }
  return false;
}

namespace {

void pad_record(Record& r) {
  while (r.length() < 3) {
    r.tokens.insert(r.tokens.begin(), kBosToken);
    r.tags.insert(r.tags.begin(), kPadTag);
    ++r.pads;
  }
}

}  // namespace

Dataset load_conll(const std::string& path, bool pad_short) {
  std::ifstream in(path);
  if (!in) throw CliError(1, "cannot open " + path);
  Dataset data;
  Record current;
  std::string line;
  int64_t line_no = 0;
  auto flush = [&] {
    if (current.tokens.empty()) return;
    if (current.length() < 3 && !pad_short) {
      throw CliError(2, path + ": sentence ending at line " +
                            std::to_string(line_no) +
                            " is shorter than 3 tokens");
    }
    pad_record(current);
    data.records.push_back(std::move(current));
    current = Record{};
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    const size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size() ||
        line.find('\t', tab + 1) != std::string::npos) {
      throw CliError(2, path + " line " + std::to_string(line_no) +
                            ": expected 'token<TAB>tag'");
    }
    current.tokens.push_back(line.substr(0, tab));
    current.tags.push_back(line.substr(tab + 1));
  }
  flush();
  return data;
}

void save_conll(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw CliError(1, "cannot open " + path + " for writing");
  for (const Record& r : data.records) {
    for (int32_t i = r.pads; i < r.length(); ++i) {
      out << r.tokens[i] << '\t' << r.tags[i] << '\n';
    }
    out << '\n';
  }
  if (!out) throw CliError(1, "write to " + path + " failed");
}

void build_vocabs(Dataset& data) {
  data.token_vocab.clear();
  data.tag_vocab.clear();
  std::unordered_set<std::string> seen_tokens, seen_tags;
  bool padded = false;
  for (const Record& r : data.records) {
    padded = padded || r.pads > 0;
    for (int32_t i = r.pads; i < r.length(); ++i) {
      if (seen_tokens.insert(r.tokens[i]).second) {
        data.token_vocab.push_back(r.tokens[i]);
      }
      const std::string& tag = r.tags[i];
      if (tag != kUnannotated && seen_tags.insert(tag).second) {
        data.tag_vocab.push_back(tag);
      }
    }
  }
  data.token_vocab.push_back(kUnkToken);
  if (padded) {
    data.token_vocab.push_back(kBosToken);
    data.tag_vocab.push_back(kPadTag);
  }
}

int32_t token_id(const std::vector<std::string>& vocab,
                 const std::string& token) {
  for (size_t i = 0; i < vocab.size(); ++i) {
    if (vocab[i] == token) return static_cast<int32_t>(i);
  }
  for (size_t i = 0; i < vocab.size(); ++i) {
    if (vocab[i] == kUnkToken) return static_cast<int32_t>(i);
  }
  throw CliError(1, "vocabulary has no <unk> entry");
}

int32_t tag_id(const std::vector<std::string>& vocab, const std::string& tag) {
  for (size_t i = 0; i < vocab.size(); ++i) {
    if (vocab[i] == tag) return static_cast<int32_t>(i);
  }
  throw CliError(2, "unknown tag '" + tag + "'");
}

}  // namespace cli
