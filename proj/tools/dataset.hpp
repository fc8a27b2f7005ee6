#pragma once

#include <string>
#include <vector>

namespace cli {

inline constexpr const char* kUnannotated = "_";
inline constexpr const char* kBosToken = "<bos>";
inline constexpr const char* kPadTag = "<pad>";
inline constexpr const char* kUnkToken = "<unk>";

// One sentence. Records shorter than the minimum engine length arrive padded
// with reserved boundary tokens in front; `pads` counts them so outputs can
// be stripped back.
struct Record {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;  // "_" marks an unannotated position
  int32_t pads = 0;

  int32_t length() const { return static_cast<int32_t>(tokens.size()); }
  bool fully_annotated() const;
  bool has_partial() const;
};

struct Dataset {
  std::vector<Record> records;
  std::vector<std::string> token_vocab;  // insertion order; <unk>/<bos> last
  std::vector<std::string> tag_vocab;    // insertion order; <pad> last if used

  bool any_padded() const;
  bool any_partial() const;
};

// CoNLL-style TSV: "token<TAB>tag" lines, blank-line separated sentences.
// Malformed lines fail with the 1-based line number. Sentences shorter than
// three tokens get reserved boundary padding (conll format) or are rejected
// (synth format, which guarantees well-formed lengths).
Dataset load_conll(const std::string& path, bool pad_short = true);

void save_conll(const std::string& path, const Dataset& data);

// Deterministic vocabularies in first-seen order, then reserved entries.
void build_vocabs(Dataset& data);

// Index of a token/tag in a vocabulary; tokens fall back to <unk>, unknown
// tags are rejected.
int32_t token_id(const std::vector<std::string>& vocab,
                 const std::string& token);
int32_t tag_id(const std::vector<std::string>& vocab, const std::string& tag);

}  // namespace cli
