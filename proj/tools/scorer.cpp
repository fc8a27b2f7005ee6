#include "scorer.hpp"

#include <fstream>
#include <json.hpp>
#include <limits>

#include "capi_util.hpp"

namespace cli {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

Structure parse_structure(const std::string& name) {
  if (name == "none") return Structure::kNone;
  if (name == "bies") return Structure::kBies;
  throw CliError(4, "unknown structure '" + name + "'");
}

std::string structure_name(Structure s) {
  return s == Structure::kBies ? "bies" : "none";
}

LinearScorer LinearScorer::zeros(std::vector<std::string> tokens,
                                 std::vector<std::string> tags,
                                 Structure structure) {
  LinearScorer scorer;
  scorer.tokens = std::move(tokens);
  scorer.tags = std::move(tags);
  scorer.structure = structure;
  scorer.emission.assign(scorer.tokens.size() * scorer.tags.size(), 0.0);
  scorer.transition.assign(scorer.tags.size() * scorer.tags.size(), 0.0);
  return scorer;
}

BiesInfo BiesInfo::analyze(const std::vector<std::string>& tags) {
  BiesInfo info;
  info.kind.assign(tags.size(), 0);
  info.type.assign(tags.size(), -1);
  std::vector<std::string> types;
  for (size_t i = 0; i < tags.size(); ++i) {
    const std::string& tag = tags[i];
    if (tag.size() < 3 || tag[1] != '-') continue;
    const char k = tag[0];
    if (k != 'B' && k != 'I' && k != 'E' && k != 'S') continue;
    const std::string type = tag.substr(2);
    int32_t type_index = -1;
    for (size_t j = 0; j < types.size(); ++j) {
      if (types[j] == type) type_index = static_cast<int32_t>(j);
    }
    if (type_index < 0) {
      type_index = static_cast<int32_t>(types.size());
      types.push_back(type);
    }
    info.kind[i] = k;
    info.type[i] = type_index;
  }
  return info;
}

bool BiesInfo::pair_allowed(int32_t from, int32_t to) const {
  const char a = kind[from], b = kind[to];
  if (a == 0 || b == 0) return false;
  if (a == 'B' || a == 'I') {
    return (b == 'I' || b == 'E') && type[from] == type[to];
  }
  return b == 'B' || b == 'S';  // after E or S a new segment starts
}

bool BiesInfo::start_allowed(int32_t tag) const {
  return kind[tag] == 'B' || kind[tag] == 'S';
}

bool BiesInfo::end_allowed(int32_t tag) const {
  return kind[tag] == 'E' || kind[tag] == 'S';
}

std::vector<int32_t> record_token_ids(const LinearScorer& scorer,
                                      const Record& r) {
  std::vector<int32_t> ids;
  ids.reserve(r.tokens.size());
  for (const std::string& token : r.tokens) {
    ids.push_back(token_id(scorer.tokens, token));
  }
  return ids;
}

namespace {

int32_t pad_tag_index(const LinearScorer& scorer) {
  for (size_t i = 0; i < scorer.tags.size(); ++i) {
    if (scorer.tags[i] == kPadTag) return static_cast<int32_t>(i);
  }
  return -1;
}

// Per-position allowed tag sets from the pad prefix and BIES boundaries.
std::vector<std::vector<uint8_t>> position_sets(const LinearScorer& scorer,
                                                int32_t n, int32_t pads) {
  const int32_t T = scorer.num_tags();
  const int32_t pad_tag = pad_tag_index(scorer);
  const bool bies = scorer.structure == Structure::kBies;
  BiesInfo info;
  if (bies) info = BiesInfo::analyze(scorer.tags);

  std::vector<std::vector<uint8_t>> sets(n, std::vector<uint8_t>(T, 1));
  for (int32_t i = 0; i < n; ++i) {
    for (int32_t t = 0; t < T; ++t) {
      bool ok;
      if (i < pads) {
        ok = t == pad_tag;
      } else {
        ok = t != pad_tag;
        if (ok && bies) {
          if (i == pads) ok = info.start_allowed(t);
          if (ok && i == n - 1) ok = info.end_allowed(t);
        }
      }
      sets[i][t] = ok ? 1 : 0;
    }
  }
  return sets;
}

std::vector<uint8_t> mask_from_sets(
    const LinearScorer& scorer, int32_t n, int32_t pads,
    const std::vector<std::vector<uint8_t>>& sets, bool apply_pairs) {
  const int32_t T = scorer.num_tags();
  const bool bies = apply_pairs && scorer.structure == Structure::kBies;
  BiesInfo info;
  if (bies) info = BiesInfo::analyze(scorer.tags);

  std::vector<uint8_t> mask(static_cast<size_t>(n - 1) * T * T, 0);
  for (int32_t i = 0; i < n - 1; ++i) {
    for (int32_t t = 0; t < T; ++t) {
      if (!sets[i][t]) continue;
      for (int32_t tp = 0; tp < T; ++tp) {
        if (!sets[i + 1][tp]) continue;
        bool ok = true;
        if (bies && i >= pads) ok = info.pair_allowed(t, tp);
        if (ok) mask[(static_cast<size_t>(i) * T + t) * T + tp] = 1;
      }
    }
  }
  return mask;
}

}  // namespace

std::vector<uint8_t> structural_mask(const LinearScorer& scorer,
                                     const Record& r) {
  auto sets = position_sets(scorer, r.length(), r.pads);
  return mask_from_sets(scorer, r.length(), r.pads, sets, true);
}

std::vector<uint8_t> annotation_mask(const LinearScorer& scorer,
                                     const Record& r) {
  const int32_t T = scorer.num_tags();
  std::vector<std::vector<uint8_t>> sets(r.length(),
                                         std::vector<uint8_t>(T, 1));
  const int32_t pad_tag = pad_tag_index(scorer);
  for (int32_t i = 0; i < r.length(); ++i) {
    if (r.tags[i] == kUnannotated) {
      if (pad_tag >= 0) sets[i][pad_tag] = i < r.pads ? 1 : 0;
      continue;
    }
    const int32_t gold = tag_id(scorer.tags, r.tags[i]);
    for (int32_t t = 0; t < T; ++t) sets[i][t] = t == gold ? 1 : 0;
  }
  return mask_from_sets(scorer, r.length(), r.pads, sets, false);
}

std::vector<double> score_sentence(const LinearScorer& scorer,
                                   const std::vector<int32_t>& token_ids,
                                   int32_t pads) {
  const int32_t n = static_cast<int32_t>(token_ids.size());
  const int32_t T = scorer.num_tags();
  std::vector<double> w(static_cast<size_t>(n - 1) * T * T);
  for (int32_t i = 0; i < n - 1; ++i) {
    for (int32_t t = 0; t < T; ++t) {
      for (int32_t tp = 0; tp < T; ++tp) {
        double v = scorer.a(t, tp) + scorer.e(token_ids[i + 1], tp);
        if (i == 0) v += scorer.e(token_ids[0], t);
        w[(static_cast<size_t>(i) * T + t) * T + tp] = v;
      }
    }
  }
  auto sets = position_sets(scorer, n, pads);
  std::vector<uint8_t> mask = mask_from_sets(scorer, n, pads, sets, true);
  for (size_t a = 0; a < w.size(); ++a) {
    if (!mask[a]) w[a] = kNegInf;
  }
  return w;
}

void accumulate_gradient(const LinearScorer& scorer,
                         const std::vector<int32_t>& token_ids,
                         const std::vector<double>& arc_grad,
                         std::vector<double>& emission_grad,
                         std::vector<double>& transition_grad) {
  const int32_t n = static_cast<int32_t>(token_ids.size());
  const int32_t T = scorer.num_tags();
  for (int32_t i = 0; i < n - 1; ++i) {
    for (int32_t t = 0; t < T; ++t) {
      for (int32_t tp = 0; tp < T; ++tp) {
        const double g = arc_grad[(static_cast<size_t>(i) * T + t) * T + tp];
        if (g == 0.0) continue;
        transition_grad[static_cast<size_t>(t) * T + tp] += g;
        emission_grad[static_cast<size_t>(token_ids[i + 1]) * T + tp] += g;
        if (i == 0) {
          emission_grad[static_cast<size_t>(token_ids[0]) * T + t] += g;
        }
      }
    }
  }
}

void save_model(const std::string& path, const LinearScorer& scorer) {
  nlohmann::json j;
  j["version"] = 1;
  j["structure"] = structure_name(scorer.structure);
  j["tokens"] = scorer.tokens;
  j["tags"] = scorer.tags;
  j["emission"] = scorer.emission;
  j["transition"] = scorer.transition;
  std::ofstream out(path);
  if (!out) throw CliError(1, "cannot open " + path + " for writing");
  out << j.dump() << '\n';
  if (!out) throw CliError(1, "write to " + path + " failed");
}

LinearScorer load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliError(1, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
    LinearScorer scorer;
    scorer.structure = parse_structure(j.at("structure").get<std::string>());
    scorer.tokens = j.at("tokens").get<std::vector<std::string>>();
    scorer.tags = j.at("tags").get<std::vector<std::string>>();
    scorer.emission = j.at("emission").get<std::vector<double>>();
    scorer.transition = j.at("transition").get<std::vector<double>>();
    if (scorer.emission.size() != scorer.tokens.size() * scorer.tags.size() ||
        scorer.transition.size() != scorer.tags.size() * scorer.tags.size()) {
      throw CliError(2, path + ": model table sizes are inconsistent");
    }
    return scorer;
  } catch (const nlohmann::json::exception& e) {
    throw CliError(2, path + ": " + e.what());
  }
}

}  // namespace cli
