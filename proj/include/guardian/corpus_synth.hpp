#pragma once

// Deterministic synthetic corpus: one case per document in the registry,
// bulletin and narrative families, with the gold record in a trailer after
// the end-of-document sentinel.

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "guardian/common.hpp"
#include "guardian/geocode.hpp"
#include "guardian/schema.hpp"

namespace guardian {

struct SynthesisSpec {
  std::uint64_t seed = 42;
  std::map<SourceFamily, int> count_per_family;
  double narrative_cue_rate = 0.5;
  double label_dropout_rate = 0.0;
  /// Throws ConfigError on a rate outside [0,1], a negative count or the unknown family.
  void validate() const;
};

Json to_json(const SynthesisSpec& spec);

struct SynthCase {
  Json gold;
  SourceFamily family = SourceFamily::registry_form;
  std::string document_id;
  std::string document_text;  // body, sentinel and trailer
  std::string oracle_marker;  // the sentinel line and the marker line
};

struct RenderKnobs {
  double label_dropout_rate = 0.0;
  bool whitespace_jitter = true;
};

/// Source label written into gold provenance for each family.
std::string synth_source_label(SourceFamily family);

/// Body text only (no trailer). Dropped labels become sentences in an
/// unlabeled paragraph; the case number line is always kept.
std::string render_family(const Json& gold, SourceFamily family, const RenderKnobs& knobs, std::mt19937_64& rng);

/// Families in registry, bulletin, narrative order; within a family by index.
/// Places come from the gazetteer entries that carry a postal code.
std::vector<SynthCase> synthesize(const SynthesisSpec& spec, const Gazetteer& gazetteer);

/// Writes <document_id>.txt per case, gold.jsonl (case_id order) and
/// manifest.json into `dir`, creating it.
void write_corpus(const std::vector<SynthCase>& cases, const SynthesisSpec& spec, const std::filesystem::path& dir,
                  const SchemaDefinition& schema);

}  // namespace guardian
