#include "guardian/corpus_synth.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <functional>
#include <sstream>

#include "guardian/backends.hpp"
#include "guardian/emit.hpp"
#include "guardian/rule_parsers.hpp"
#include "guardian/timeutil.hpp"

namespace guardian {

namespace {

constexpr std::array<const char*, 16> kFemaleNames = {"Ada",   "Bria",  "Cora",  "Dalia", "Edie",  "Fern",
                                                      "Greta", "Hazel", "Iris",  "Juno",  "Kira",  "Lena",
                                                      "Mira",  "Nola",  "Opal",  "Petra"};
constexpr std::array<const char*, 16> kMaleNames = {"Abel", "Boyd",  "Cyrus", "Dane",  "Emory", "Flint",
                                                    "Gage", "Hollis", "Ivo",  "Jory",  "Kellan", "Lyle",
                                                    "Milo", "Nash",  "Orrin", "Pike"};
constexpr std::array<const char*, 20> kSurnames = {
    "Ashgrove", "Brindle", "Calloway", "Dunmore",  "Ellery",  "Fairweld", "Garrow",  "Hartsell", "Ingram",  "Jessop",
    "Kettering", "Larkin", "Merriday", "Northcott", "Oakhurst", "Pellham", "Quarry", "Redfern",  "Sallow",  "Thorne"};
constexpr std::array<const char*, 6> kRaces = {"White", "Black", "Hispanic", "Asian", "American Indian", "Multiracial"};
constexpr std::array<const char*, 8> kClothing = {
    "blue jeans and a gray hooded sweatshirt", "a red windbreaker and black leggings",
    "khaki pants and a green flannel shirt",   "a black puffer jacket and white sneakers",
    "a denim jacket over a yellow t-shirt",    "navy scrubs and brown work boots",
    "a maroon cardigan and dark slacks",       "a camouflage jacket and a knit cap"};
constexpr std::array<const char*, 8> kFeatures = {
    "a rose tattoo on the left wrist", "a scar above the right eyebrow", "pierced ears and a nose ring",
    "a birthmark on the neck",         "wears wire-rimmed glasses",      "a chipped front tooth",
    "freckles across the nose",        "a star tattoo behind the right ear"};
constexpr std::array<const char*, 8> kOpenings = {
    "was last seen leaving a residence on the east side of town in the early evening.",
    "left work at the end of a shift and did not arrive home.",
    "was dropped off near a convenience store and has not been heard from since.",
    "walked away from a family gathering after an argument.",
    "was seen getting into a dark sedan with an unknown driver.",
    "failed to return after going out to meet a friend.",
    "was last seen at a bus shelter near the county courthouse.",
    "missed a scheduled appointment and could not be reached by phone."};
constexpr std::array<const char*, 6> kFollowUps = {
    "Family members say this is out of character.",
    "A phone associated with the case has been switched off since that night.",
    "Investigators have asked nearby businesses for camera footage.",
    "No activity has been seen on known bank accounts.",
    "Relatives reported the disappearance after several unanswered calls.",
    "A vehicle connected to the case has not been located."};
constexpr std::array<const char*, 12> kMonths = {"January", "February", "March",     "April",   "May",      "June",
                                                 "July",    "August",   "September", "October", "November", "December"};

// Uniform double in [0,1) from the top 53 bits; portable across standard libraries.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0); }

size_t pick(std::mt19937_64& rng, size_t n) { return std::min(n - 1, static_cast<size_t>(unit(rng) * static_cast<double>(n))); }

int between(std::mt19937_64& rng, int lo, int hi) { return lo + static_cast<int>(pick(rng, static_cast<size_t>(hi - lo + 1))); }

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

char family_letter(SourceFamily f) {
  switch (f) {
    case SourceFamily::registry_form: return 'R';
    case SourceFamily::bulletin: return 'B';
    case SourceFamily::narrative_profile: return 'N';
    case SourceFamily::unknown: break;
  }
  return 'U';
}

std::string family_file_prefix(SourceFamily f) {
  switch (f) {
    case SourceFamily::registry_form: return "registry";
    case SourceFamily::bulletin: return "bulletin";
    case SourceFamily::narrative_profile: return "narrative";
    case SourceFamily::unknown: break;
  }
  return "unknown";
}

std::string pad4(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", i);
  return buf;
}

struct Date {
  int y, m, d;
};

std::string iso(const Date& t) { return format_iso_date(t.y, static_cast<unsigned>(t.m), static_cast<unsigned>(t.d)); }

std::string slashed(const Date& t) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d/%02d/%04d", t.m, t.d, t.y);
  return buf;
}

std::string spelled(const Date& t) {
  return std::string(kMonths[static_cast<size_t>(t.m - 1)]) + " " + std::to_string(t.d) + ", " + std::to_string(t.y);
}

Date parse_date(const Json& v) {
  auto s = v.get<std::string>();
  return {std::stoi(s.substr(0, 4)), std::stoi(s.substr(5, 2)), std::stoi(s.substr(8, 2))};
}

std::string feet_inches(int inches) { return std::to_string(inches / 12) + "'" + std::to_string(inches % 12) + "\""; }

int inches_to_cm(int in) { return (in * 254 + 50) / 100; }
int pounds_to_kg(int lb) { return static_cast<int>((lb * 45359237LL + 50000000LL) / 100000000LL); }

// Structural facts that the gold alone cannot recover (units as stated in the
// source) travel with the gold under this key and are stripped before writing.
constexpr const char* kRenderKey = "_render";

Json make_gold(SourceFamily family, int index, const SynthesisSpec& spec, const std::vector<const GazetteerEntry*>& places,
               std::mt19937_64& rng, const SchemaDefinition& schema) {
  Json g = record_skeleton(schema);
  std::string case_id = std::string("SYN-") + family_letter(family) + "-" + pad4(index);
  g["case_id"] = case_id;

  bool female = unit(rng) < 0.5;
  std::string first = female ? kFemaleNames[pick(rng, kFemaleNames.size())] : kMaleNames[pick(rng, kMaleNames.size())];
  std::string name = first + " " + kSurnames[pick(rng, kSurnames.size())];
  auto& d = g["demographic"];
  d["name"] = name;
  d["sex"] = female ? "female" : "male";
  d["age_years"] = between(rng, 14, 70);
  int height_in = between(rng, 58, 76);
  bool height_range = family == SourceFamily::registry_form && unit(rng) < 0.3;
  int height_lo = height_range ? height_in - 2 : height_in;
  d["height_min_cm"] = inches_to_cm(height_lo);
  d["height_max_cm"] = inches_to_cm(height_in);
  int weight_lb = between(rng, 95, 240);
  bool weight_range = family == SourceFamily::registry_form && unit(rng) < 0.3;
  int weight_lo = weight_range ? weight_lb - 10 : weight_lb;
  d["weight_min_kg"] = pounds_to_kg(weight_lo);
  d["weight_max_kg"] = pounds_to_kg(weight_lb);
  d["race_ethnicity"] = kRaces[pick(rng, kRaces.size())];

  const GazetteerEntry& place = *places[pick(rng, places.size())];
  auto& s = g["spatial"];
  const std::string& zip = place.postal_codes.front();
  s["last_seen_location"] = place.place_name + ", " + place.admin_region + " " + zip;
  s["city"] = place.place_name;
  s["state"] = place.admin_region;
  s["postal_code"] = zip;
  s["lat"] = place.lat;
  s["lon"] = place.lon;
  s["geocode_method"] = "gazetteer";
  s["geocode_plausible"] = true;

  Date seen{between(rng, 2015, 2023), between(rng, 1, 12), between(rng, 1, 25)};
  auto& t = g["temporal"];
  t["last_seen_ts"] = iso(seen);
  if (family == SourceFamily::registry_form) {
    Date reported{seen.y, seen.m, seen.d + between(rng, 1, 3)};
    t["reported_missing_ts"] = iso(reported);
  }
  t["timezone"] = "America/New_York";

  auto& n = g["narrative_osint"];
  std::string circ = name + " " + kOpenings[pick(rng, kOpenings.size())] + " " + kFollowUps[pick(rng, kFollowUps.size())];
  if (family == SourceFamily::narrative_profile && unit(rng) < spec.narrative_cue_rate) {
    std::vector<std::string> cues;
    int want = unit(rng) < 0.5 ? 1 : 2;
    for (int guard = 0; static_cast<int>(cues.size()) < want && guard < 50; ++guard) {
      const auto& cand = places[pick(rng, places.size())]->place_name;
      if (cand != place.place_name && std::find(cues.begin(), cues.end(), cand) == cues.end()) cues.push_back(cand);
    }
    circ += std::string(" ") + (female ? "She" : "He") + " was believed to be en route to " + cues.front();
    if (cues.size() > 1) circ += " or " + cues[1];
    circ += ".";
    n["movement_cues"] = cues;
  }
  n["circumstances"] = circ;
  if (family != SourceFamily::narrative_profile || unit(rng) < 0.7) {
    n["clothing_description"] = kClothing[pick(rng, kClothing.size())];
  }
  if (unit(rng) < 0.6) n["distinctive_features"] = kFeatures[pick(rng, kFeatures.size())];

  g["outcome"]["status"] = "missing";

  auto& p = g["provenance"];
  p["source_label"] = synth_source_label(family);
  p["source_family"] = std::string(to_string(family));
  p["extraction_path"] = "rule";
  p["engine_used"] = "plaintext";
  p["document_id"] = family_file_prefix(family) + "_" + pad4(index);

  g[kRenderKey] = Json{{"height_lo_in", height_lo}, {"height_hi_in", height_in},
                       {"weight_lo_lb", weight_lo}, {"weight_hi_lb", weight_lb}};
  return g;
}

// One renderable fact: its labeled line(s) and the sentence used when the label is dropped.
struct Fact {
  std::string labeled;
  std::string sentence;
};

std::string jitter(std::mt19937_64& rng, bool on) {
  if (!on) return "";
  double u = unit(rng);
  if (u < 0.15) return "  ";
  if (u < 0.25) return "\t";
  return "";
}

// Imperial as generated when the render hints exist, metric from the gold otherwise.
std::string height_text(const Json& r, const Json& d) {
  if (!r.contains("height_lo_in")) {
    int lo = d["height_min_cm"], hi = d["height_max_cm"];
    return lo == hi ? std::to_string(hi) + " cm" : std::to_string(lo) + " - " + std::to_string(hi) + " cm";
  }
  int lo = r["height_lo_in"], hi = r["height_hi_in"];
  return lo == hi ? feet_inches(hi) : feet_inches(lo) + " to " + feet_inches(hi);
}

std::string weight_text(const Json& r, const Json& d, const char* unit_word) {
  if (!r.contains("weight_lo_lb")) {
    int lo = d["weight_min_kg"], hi = d["weight_max_kg"];
    return lo == hi ? std::to_string(hi) + " kg" : std::to_string(lo) + " - " + std::to_string(hi) + " kg";
  }
  int lo = r["weight_lo_lb"], hi = r["weight_hi_lb"];
  return lo == hi ? std::to_string(hi) + " " + unit_word
                  : std::to_string(lo) + " - " + std::to_string(hi) + " " + unit_word;
}

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::string capitalized(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

}  // namespace

void SynthesisSpec::validate() const {
  auto rate = [](double r, const char* what) {
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError(std::string(what) + " must be in [0,1]");
  };
  rate(narrative_cue_rate, "narrative_cue_rate");
  rate(label_dropout_rate, "label_dropout_rate");
  for (const auto& [f, n] : count_per_family) {
    if (f == SourceFamily::unknown) throw ConfigError("cannot synthesize the unknown family");
    if (n < 0) throw ConfigError("negative count for " + std::string(to_string(f)));
    if (n > 9999) throw ConfigError("at most 9999 cases per family");
  }
}

Json to_json(const SynthesisSpec& spec) {
  Json counts = Json::object();
  for (const auto& [f, n] : spec.count_per_family) counts[std::string(to_string(f))] = n;
  return Json{{"seed", spec.seed},
              {"count_per_family", counts},
              {"narrative_cue_rate", spec.narrative_cue_rate},
              {"label_dropout_rate", spec.label_dropout_rate}};
}

std::string synth_source_label(SourceFamily family) {
  switch (family) {
    case SourceFamily::registry_form: return "synthetic_registry";
    case SourceFamily::bulletin: return "synthetic_bulletin";
    case SourceFamily::narrative_profile: return "synthetic_narrative";
    case SourceFamily::unknown: break;
  }
  return "unknown";
}

std::string render_family(const Json& gold, SourceFamily family, const RenderKnobs& knobs, std::mt19937_64& rng) {
  const auto& d = gold["demographic"];
  const auto& s = gold["spatial"];
  const auto& t = gold["temporal"];
  const auto& n = gold["narrative_osint"];
  const Json render = gold.contains(kRenderKey) ? gold[kRenderKey] : Json::object();
  bool female = d["sex"] == "female";
  std::string pron = female ? "she" : "he";
  std::string Pron = capitalized(pron);
  std::string name = d["name"];
  std::string sex_word = female ? "Female" : "Male";
  std::string age = std::to_string(d["age_years"].get<int>());
  std::string race = d["race_ethnicity"];
  std::string location = s["last_seen_location"];
  Date seen = parse_date(t["last_seen_ts"]);
  std::string circ = n["circumstances"];
  std::string case_id = gold["case_id"];
  auto sep = [&] { return ":" + jitter(rng, knobs.whitespace_jitter) + " "; };
  auto tail = [&] { return unit(rng) < 0.2 && knobs.whitespace_jitter ? std::string("  ") : std::string(); };

  std::vector<std::string> head;
  std::vector<Fact> facts;
  std::string footer;
  std::string circumstances_labeled;
  std::string name_dropped_banner;

  switch (family) {
    case SourceFamily::registry_form: {
      head = {"MISSING PERSONS REGISTRY", "Case Report", "", "Case Number" + sep() + case_id + tail()};
      facts.push_back({"Name" + sep() + name, name + " has not been heard from since."});
      facts.push_back({"Sex" + sep() + sex_word, "The missing person is " + to_lower(sex_word) + "."});
      facts.push_back({"Age Last Seen" + sep() + age, Pron + " was " + age + " years old at the time."});
      facts.push_back({"Race / Ethnicity" + sep() + race, Pron + " is described as " + race + "."});
      facts.push_back({"Height" + sep() + height_text(render, d), Pron + " stands about " + height_text(render, d) + "."});
      facts.push_back({"Weight" + sep() + weight_text(render, d, "lbs"),
                       Pron + " weighs about " + weight_text(render, d, "pounds") + "."});
      facts.push_back({"Date of Last Contact" + sep() + slashed(seen), Pron + " was last seen on " + spelled(seen) + "."});
      if (!t["reported_missing_ts"].is_null()) {
        Date rep = parse_date(t["reported_missing_ts"]);
        facts.push_back({"Date Reported Missing" + sep() + slashed(rep),
                         "The disappearance was reported on " + spelled(rep) + "."});
      }
      facts.push_back({"Location of Last Contact\n" + location, Pron + " was last seen in " + location + "."});
      if (n["clothing_description"].is_string()) {
        std::string c = n["clothing_description"];
        facts.push_back({"Clothing" + sep() + c, "At the time " + pron + " was wearing " + c + "."});
      }
      if (n["distinctive_features"].is_string()) {
        std::string f = n["distinctive_features"];
        facts.push_back({"Distinctive Features" + sep() + f, "Identifying details include " + f + "."});
      }
      circumstances_labeled = "Circumstances of Disappearance\n" + circ;
      footer = "Registry entries are updated as information is verified";
      break;
    }
    case SourceFamily::bulletin: {
      name_dropped_banner = "MISSING PERSON";
      head = {};
      facts.push_back({"MISSING" + sep() + upper(name), name + " has not been heard from since."});
      head.push_back("CASE #" + sep() + case_id + tail());
      facts.push_back({"AGE" + sep() + age, Pron + " was " + age + " years old at the time."});
      facts.push_back({"SEX" + sep() + (female ? "F" : "M"), "The missing person is " + to_lower(sex_word) + "."});
      facts.push_back({"RACE" + sep() + race, Pron + " is described as " + race + "."});
      facts.push_back({"HEIGHT" + sep() + height_text(render, d), Pron + " stands about " + height_text(render, d) + "."});
      facts.push_back({"WEIGHT" + sep() + weight_text(render, d, "LBS"),
                       Pron + " weighs about " + weight_text(render, d, "pounds") + "."});
      facts.push_back({"LAST SEEN" + sep() + slashed(seen), Pron + " was last seen on " + spelled(seen) + "."});
      facts.push_back({"LOCATION" + sep() + location, Pron + " was last seen in " + location + "."});
      if (n["clothing_description"].is_string()) {
        std::string c = n["clothing_description"];
        facts.push_back({"WEARING" + sep() + c, "At the time " + pron + " was wearing " + c + "."});
      }
      if (n["distinctive_features"].is_string()) {
        std::string f = n["distinctive_features"];
        facts.push_back({"MARKS" + sep() + f, "Identifying details include " + f + "."});
      }
      circumstances_labeled = "DETAILS" + sep() + circ;
      footer = "IF YOU HAVE ANY INFORMATION PLEASE CALL 555-0100";
      break;
    }
    case SourceFamily::narrative_profile:
    case SourceFamily::unknown: {
      head = {"Community Case Profile", "", "Reference" + sep() + case_id + tail()};
      facts.push_back({"Name" + sep() + name, name + " has not been heard from since."});
      facts.push_back({"Gender" + sep() + sex_word, "The missing person is " + to_lower(sex_word) + "."});
      facts.push_back({"Age" + sep() + age, Pron + " was " + age + " years old at the time."});
      facts.push_back({"Race" + sep() + race, Pron + " is described as " + race + "."});
      facts.push_back({"Height" + sep() + height_text(render, d), Pron + " stands about " + height_text(render, d) + "."});
      facts.push_back({"Weight" + sep() + weight_text(render, d, "lbs"),
                       Pron + " weighs about " + weight_text(render, d, "pounds") + "."});
      facts.push_back({"Last Seen" + sep() + spelled(seen), Pron + " was last seen on " + spelled(seen) + "."});
      facts.push_back({"Location" + sep() + location, Pron + " was last seen in " + location + "."});
      if (n["clothing_description"].is_string()) {
        std::string c = n["clothing_description"];
        facts.push_back({"Clothing" + sep() + c, "At the time " + pron + " was wearing " + c + "."});
      }
      if (n["distinctive_features"].is_string()) {
        std::string f = n["distinctive_features"];
        facts.push_back({"Features" + sep() + f, "Identifying details include " + f + "."});
      }
      circumstances_labeled = "Circumstances" + sep() + circ;
      footer = "Share this profile";
      break;
    }
  }

  std::vector<std::string> kept;
  std::vector<std::string> prose;
  bool name_dropped = false;
  for (size_t i = 0; i < facts.size(); ++i) {
    if (unit(rng) < knobs.label_dropout_rate) {
      prose.push_back(facts[i].sentence);
      if (i == 0) name_dropped = true;
    } else {
      kept.push_back(facts[i].labeled + tail());
    }
  }
  bool circ_dropped = unit(rng) < knobs.label_dropout_rate;

  std::ostringstream os;
  if (family == SourceFamily::bulletin) {
    // The name doubles as the banner; a dropped name leaves a generic banner.
    if (name_dropped) os << name_dropped_banner << '\n';
    auto it = kept.begin();
    if (!name_dropped) os << *it++ << '\n';
    os << head.front() << '\n';
    for (; it != kept.end(); ++it) os << *it << '\n';
  } else {
    for (const auto& h : head) os << h << '\n';
    os << '\n';
    for (const auto& k : kept) os << k << '\n';
  }
  if (!prose.empty()) {
    os << '\n';
    for (size_t i = 0; i < prose.size(); ++i) os << (i ? " " : "") << prose[i];
    os << '\n';
  }
  os << '\n' << (circ_dropped ? circ : circumstances_labeled) << '\n';
  if (knobs.whitespace_jitter && unit(rng) < 0.3) os << '\n';
  os << '\n' << footer << '\n';
  return os.str();
}

std::vector<SynthCase> synthesize(const SynthesisSpec& spec, const Gazetteer& gazetteer) {
  spec.validate();
  static const SchemaDefinition schema = default_schema();
  std::vector<const GazetteerEntry*> places;
  for (const auto& e : gazetteer.entries()) {
    if (!e.postal_codes.empty()) places.push_back(&e);
  }
  if (places.empty()) throw ConfigError("gazetteer has no entries with postal codes");

  std::vector<SynthCase> out;
  for (SourceFamily family : {SourceFamily::registry_form, SourceFamily::bulletin, SourceFamily::narrative_profile}) {
    auto it = spec.count_per_family.find(family);
    int count = it == spec.count_per_family.end() ? 0 : it->second;
    for (int i = 0; i < count; ++i) {
      std::uint64_t key = splitmix(spec.seed ^ splitmix(static_cast<std::uint64_t>(family) * 1000003ULL + static_cast<std::uint64_t>(i)));
      std::mt19937_64 rng(key);
      Json gold = make_gold(family, i, spec, places, rng, schema);
      std::string body = render_family(gold, family, RenderKnobs{spec.label_dropout_rate, true}, rng);
      gold.erase(kRenderKey);

      SynthCase c;
      c.family = family;
      c.document_id = gold["provenance"]["document_id"];
      c.oracle_marker = std::string(kEndOfDocumentSentinel) + "\n" + make_gold_marker(0, gold) + "\n";
      c.document_text = body + "\n" + c.oracle_marker;
      c.gold = std::move(gold);
      out.push_back(std::move(c));
    }
  }
  return out;
}

void write_corpus(const std::vector<SynthCase>& cases, const SynthesisSpec& spec, const std::filesystem::path& dir,
                  const SchemaDefinition& schema) {
  std::filesystem::create_directories(dir);
  std::vector<Json> golds;
  Json docs = Json::array();
  for (const auto& c : cases) {
    write_file((dir / (c.document_id + ".txt")).string(), c.document_text);
    golds.push_back(c.gold);
    docs.push_back(Json{{"document_id", c.document_id},
                        {"family", std::string(to_string(c.family))},
                        {"case_ids", Json::array({c.gold["case_id"]})}});
  }
  std::sort(docs.begin(), docs.end(),
            [](const Json& a, const Json& b) { return a["document_id"].get<std::string>() < b["document_id"].get<std::string>(); });
  write_jsonl(order_for_output(std::move(golds)), (dir / "gold.jsonl").string(), schema);
  Json manifest = to_json(spec);
  manifest["documents"] = docs;
  write_file((dir / "manifest.json").string(), manifest.dump(2) + "\n");
}

}  // namespace guardian
