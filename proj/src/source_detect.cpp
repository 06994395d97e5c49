#include "guardian/source_detect.hpp"

#include <set>

namespace guardian {

DetectionResult detect_source(std::string_view text, const std::vector<SourceSignature>& signatures) {
  DetectionResult best;
  for (size_t i = 0; i < signatures.size(); ++i) {
    const auto& sig = signatures[i];
    std::vector<MarkerHit> hits;
    for (size_t m = 0; m < sig.markers.size(); ++m) {
      if (auto match = sig.markers[m].find(text)) hits.push_back({m, match->whole.begin});
    }
    int score = static_cast<int>(hits.size());
    if (score < sig.min_markers) continue;

    bool better = false;
    if (best.signature_index < 0 || score > best.score) {
      better = true;
    } else if (score == best.score) {
      const auto& cur = signatures[static_cast<size_t>(best.signature_index)];
      better = sig.priority < cur.priority ||
               (sig.priority == cur.priority && sig.source_label < cur.source_label);
    }
    if (better) {
      best.source_label = sig.source_label;
      best.family = sig.family;
      best.matched_markers = std::move(hits);
      best.score = score;
      best.signature_index = static_cast<int>(i);
    }
  }
  return best;
}

std::vector<SourceSignature> parse_signatures(std::string_view text) {
  std::vector<SourceSignature> out;
  std::set<std::string> labels;
  int lineno = 0;
  for (const auto& line : split(text, '\n')) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto where = "signature line " + std::to_string(lineno) + ": ";
    try {
      Json j = Json::parse(line);
      SourceSignature sig;
      sig.source_label = j.at("source_label").get<std::string>();
      if (sig.source_label.empty() || sig.source_label == "unknown") {
        throw ConfigError(where + "source_label must be non-empty and not 'unknown'");
      }
      auto fam = parse_source_family(j.at("family").get<std::string>());
      if (!fam) throw ConfigError(where + "unknown family");
      sig.family = *fam;
      Pattern::Options opts{!j.value("case_sensitive", false)};
      for (const auto& m : j.at("markers")) sig.markers.emplace_back(m.get<std::string>(), opts);
      for (const auto& h : j.value("case_headers", Json::array())) {
        sig.case_headers.emplace_back(h.get<std::string>());
      }
      sig.min_markers = j.value("min_markers", 2);
      sig.priority = j.value("priority", 0);
      if (sig.markers.empty()) throw ConfigError(where + "markers must be non-empty");
      if (sig.min_markers < 1 || static_cast<size_t>(sig.min_markers) > sig.markers.size()) {
        throw ConfigError(where + "min_markers must lie in [1, number of markers]");
      }
      if (!labels.insert(sig.source_label).second) {
        throw ConfigError(where + "duplicate source_label " + sig.source_label);
      }
      out.push_back(std::move(sig));
    } catch (const Json::exception& e) {
      throw ConfigError(where + e.what());
    }
  }
  return out;
}

std::vector<SourceSignature> load_signatures(const std::string& path) {
  try {
    return parse_signatures(read_file(path));
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace guardian
