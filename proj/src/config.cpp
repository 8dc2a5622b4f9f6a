#include "reno/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "reno/errors.hpp"

namespace reno {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::string t = trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

long long parse_int(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &pos);
  } catch (const std::exception&) {
    throw ConfigError(key, "expected an integer, got '" + value + "'");
  }
  if (pos != value.size()) throw ConfigError(key, "expected an integer, got '" + value + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(value, &pos);
  } catch (const std::exception&) {
    throw ConfigError(key, "expected a non-negative integer, got '" + value + "'");
  }
  if (pos != value.size() || value.find('-') != std::string::npos) {
    throw ConfigError(key, "expected a non-negative integer, got '" + value + "'");
  }
  return v;
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    throw ConfigError(key, "expected a number, got '" + value + "'");
  }
  if (pos != value.size()) throw ConfigError(key, "expected a number, got '" + value + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError(key, "expected true/false, got '" + value + "'");
}

struct RawConfig {
  // section.key -> value, insertion-ordered per section for term lookups
  std::map<std::string, std::string> values;

  bool has(const std::string& key) const { return values.count(key) > 0; }
  const std::string* get(const std::string& key) const {
    auto it = values.find(key);
    return it == values.end() ? nullptr : &it->second;
  }
};

const std::set<std::string> kSections = {"generator", "prompt", "criterion", "optimizer",
                                         "output"};

bool known_key(const std::string& section, const std::string& key) {
  if (section == "generator") {
    return key == "kind" || key == "noise_dim" || key == "image_height" ||
           key == "image_width" || key == "weight_seed";
  }
  if (section == "prompt") return key == "text";
  if (section == "criterion") {
    if (key == "terms" || key == "lambda_reg") return true;
    // term.<name>.{weight,range,seed}; the name is validated against the term
    // list after the full file is read.
    if (key.rfind("term.", 0) == 0) {
      std::size_t last_dot = key.rfind('.');
      if (last_dot == 4 || last_dot == std::string::npos) return false;
      std::string attr = key.substr(last_dot + 1);
      return attr == "weight" || attr == "range" || attr == "seed";
    }
    return false;
  }
  if (section == "optimizer") {
    return key == "steps" || key == "learning_rate" || key == "momentum" ||
           key == "clip_norm" || key == "seeds" || key == "seed" || key == "nesterov";
  }
  if (section == "output") {
    return key == "directory" || key == "emit_every" || key == "formats";
  }
  return false;
}

RawConfig read_raw(const std::string& text, const std::vector<std::string>& overrides) {
  RawConfig raw;
  std::string section;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']') {
        throw ConfigError("line " + std::to_string(lineno), "malformed section header");
      }
      section = trim(t.substr(1, t.size() - 2));
      if (!kSections.count(section)) {
        throw ConfigError(section, "unknown section");
      }
      continue;
    }
    std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno), "expected key = value");
    }
    if (section.empty()) {
      throw ConfigError("line " + std::to_string(lineno), "key outside of any section");
    }
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (!known_key(section, key)) {
      throw ConfigError(section + "." + key, "unknown key");
    }
    std::string path = section + "." + key;
    if (raw.values.count(path)) throw ConfigError(path, "duplicate key");
    raw.values[path] = value;
  }

  for (const std::string& ov : overrides) {
    std::size_t eq = ov.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(ov, "override must look like section.key=value");
    }
    std::string path = trim(ov.substr(0, eq));
    std::string value = trim(ov.substr(eq + 1));
    std::size_t dot = path.find('.');
    if (dot == std::string::npos || !kSections.count(path.substr(0, dot)) ||
        !known_key(path.substr(0, dot), path.substr(dot + 1))) {
      throw ConfigError(path, "unknown override key");
    }
    // An override of either seed spelling supersedes the other.
    if (path == "optimizer.seed") raw.values.erase("optimizer.seeds");
    if (path == "optimizer.seeds") raw.values.erase("optimizer.seed");
    raw.values[path] = value;
  }
  return raw;
}

TermConfig default_term(const std::string& name, std::size_t height, std::size_t width) {
  TermConfig t;
  t.name = name;
  if (name == "color_r" || name == "color_g" || name == "color_b") {
    t.kind = RewardKind::kColorChannel;
    t.channel = parse_channel(name.substr(6));
    double n = static_cast<double>(height * width);
    t.weight = 1.0;
    t.lo = -2.0 * n;
    t.hi = n;
    return t;
  }
  t.kind = parse_reward_kind(name);  // throws on unknown names
  switch (t.kind) {
    case RewardKind::kProtoAlign:
      t.weight = 1.0; t.lo = -2.0; t.hi = 2.0; t.seed = 11;
      break;
    case RewardKind::kBrightnessTaste:
      t.weight = 5.0; t.lo = 0.2; t.hi = 0.4; t.seed = 22;
      break;
    case RewardKind::kEdgeSmooth:
      t.weight = 0.05; t.lo = 20.0; t.hi = 30.0; t.seed = 33;
      break;
    case RewardKind::kPromptMatch:
      t.weight = 1.0; t.lo = 0.0; t.hi = 1.0; t.seed = 44;
      break;
    case RewardKind::kColorChannel:
      break;
  }
  return t;
}

}  // namespace

double ExperimentConfig::resolved_learning_rate() const {
  if (learning_rate) return *learning_rate;
  return std::max(image_height, image_width) >= 64 ? 10.0 : 5.0;
}

GeneratorSpec ExperimentConfig::build_generator() const {
  return make_generator(generator_kind, noise_dim, image_height, image_width, weight_seed);
}

PromptEmbedding ExperimentConfig::build_prompt() const { return embed_prompt(prompt_text); }

CriterionSpec ExperimentConfig::build_criterion() const {
  return build_masked_criterion(std::vector<bool>(terms.size(), true));
}

CriterionSpec ExperimentConfig::build_masked_criterion(const std::vector<bool>& active) const {
  if (active.size() != terms.size()) {
    throw std::invalid_argument("criterion mask size does not match the term list");
  }
  CriterionSpec spec;
  spec.lambda_reg = lambda_reg;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const TermConfig& t = terms[i];
    RewardTerm term =
        t.kind == RewardKind::kColorChannel
            ? make_color_reward(t.channel, t.weight, image_height, image_width)
            : make_toy_reward(t.kind, {t.lo, t.hi}, t.weight, t.seed);
    term.name = t.name;
    if (!active[i]) term.weight = 0.0;
    spec.terms.push_back(std::move(term));
  }
  return spec;
}

OptimizerConfig ExperimentConfig::optimizer_config(std::uint64_t seed) const {
  OptimizerConfig c;
  c.steps = steps;
  c.learning_rate = resolved_learning_rate();
  c.momentum = momentum;
  c.clip_norm = clip_norm;
  c.lambda_reg = lambda_reg;
  c.seed = seed;
  c.nesterov = nesterov;
  return c;
}

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::vector<std::string>& overrides) {
  RawConfig raw = read_raw(text, overrides);
  ExperimentConfig cfg;

  const std::string* kind = raw.get("generator.kind");
  if (!kind) throw ConfigError("generator.kind", "required key is missing");
  try {
    cfg.generator_kind = parse_generator_kind(*kind);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("generator.kind", e.what());
  }

  if (const auto* v = raw.get("generator.noise_dim")) {
    long long d = parse_int("generator.noise_dim", *v);
    if (d < 2) throw ConfigError("generator.noise_dim", "must be >= 2");
    cfg.noise_dim = static_cast<std::size_t>(d);
  }
  if (const auto* v = raw.get("generator.image_height")) {
    long long d = parse_int("generator.image_height", *v);
    if (d < 1) throw ConfigError("generator.image_height", "must be >= 1");
    cfg.image_height = static_cast<std::size_t>(d);
  }
  if (const auto* v = raw.get("generator.image_width")) {
    long long d = parse_int("generator.image_width", *v);
    if (d < 1) throw ConfigError("generator.image_width", "must be >= 1");
    cfg.image_width = static_cast<std::size_t>(d);
  }
  if (const auto* v = raw.get("generator.weight_seed")) {
    cfg.weight_seed = parse_u64("generator.weight_seed", *v);
  }

  if (const auto* v = raw.get("prompt.text")) cfg.prompt_text = *v;

  std::vector<std::string> term_names = {"proto_align", "brightness_taste", "edge_smooth",
                                         "prompt_match"};
  if (const auto* v = raw.get("criterion.terms")) {
    term_names = split_list(*v);
    if (term_names.empty()) throw ConfigError("criterion.terms", "term list is empty");
  }
  std::set<std::string> seen;
  for (const std::string& name : term_names) {
    if (!seen.insert(name).second) {
      throw ConfigError("criterion.terms", "duplicate term '" + name + "'");
    }
    try {
      cfg.terms.push_back(default_term(name, cfg.image_height, cfg.image_width));
    } catch (const std::invalid_argument& e) {
      throw ConfigError("criterion.terms", e.what());
    }
  }
  if (const auto* v = raw.get("criterion.lambda_reg")) {
    cfg.lambda_reg = parse_double("criterion.lambda_reg", *v);
    if (cfg.lambda_reg < 0.0) throw ConfigError("criterion.lambda_reg", "must be >= 0");
  }

  // Per-term overrides.
  for (const auto& [path, value] : raw.values) {
    if (path.rfind("criterion.term.", 0) != 0) continue;
    std::string rest = path.substr(std::string("criterion.term.").size());
    std::size_t dot = rest.rfind('.');
    std::string name = rest.substr(0, dot);
    std::string attr = rest.substr(dot + 1);
    auto it = std::find_if(cfg.terms.begin(), cfg.terms.end(),
                           [&](const TermConfig& t) { return t.name == name; });
    if (it == cfg.terms.end()) {
      throw ConfigError(path, "term '" + name + "' is not in criterion.terms");
    }
    if (attr == "weight") {
      it->weight = parse_double(path, value);
      if (it->weight < 0.0) throw ConfigError(path, "must be >= 0");
    } else if (attr == "seed") {
      if (it->kind == RewardKind::kColorChannel) {
        throw ConfigError(path, "color terms take no seed");
      }
      it->seed = parse_u64(path, value);
    } else if (attr == "range") {
      if (it->kind == RewardKind::kColorChannel) {
        throw ConfigError(path, "color term ranges are fixed by the image size");
      }
      std::vector<std::string> parts = split_list(value);
      if (parts.size() != 2) throw ConfigError(path, "expected 'lo, hi'");
      it->lo = parse_double(path, parts[0]);
      it->hi = parse_double(path, parts[1]);
      if (!(it->lo < it->hi)) throw ConfigError(path, "range must satisfy lo < hi");
    }
  }

  if (const auto* v = raw.get("optimizer.steps")) {
    long long m = parse_int("optimizer.steps", *v);
    if (m < 0) throw ConfigError("optimizer.steps", "must be >= 0");
    cfg.steps = static_cast<int>(m);
  }
  if (const auto* v = raw.get("optimizer.learning_rate")) {
    double lr = parse_double("optimizer.learning_rate", *v);
    if (!(lr > 0.0)) throw ConfigError("optimizer.learning_rate", "must be > 0");
    cfg.learning_rate = lr;
  }
  if (const auto* v = raw.get("optimizer.momentum")) {
    cfg.momentum = parse_double("optimizer.momentum", *v);
    if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) {
      throw ConfigError("optimizer.momentum", "must lie in [0, 1)");
    }
  }
  if (const auto* v = raw.get("optimizer.clip_norm")) {
    cfg.clip_norm = parse_double("optimizer.clip_norm", *v);
    if (!(cfg.clip_norm > 0.0)) throw ConfigError("optimizer.clip_norm", "must be > 0");
  }
  if (raw.has("optimizer.seeds") && raw.has("optimizer.seed")) {
    throw ConfigError("optimizer.seed", "give either optimizer.seed or optimizer.seeds");
  }
  if (const auto* v = raw.get("optimizer.seeds")) {
    std::vector<std::string> parts = split_list(*v);
    if (parts.empty()) throw ConfigError("optimizer.seeds", "seed list is empty");
    cfg.seeds.clear();
    for (const std::string& p : parts) cfg.seeds.push_back(parse_u64("optimizer.seeds", p));
  }
  if (const auto* v = raw.get("optimizer.seed")) {
    cfg.seeds = {parse_u64("optimizer.seed", *v)};
  }
  if (const auto* v = raw.get("optimizer.nesterov")) {
    cfg.nesterov = parse_bool("optimizer.nesterov", *v);
  }

  if (const auto* v = raw.get("output.directory")) {
    if (v->empty()) throw ConfigError("output.directory", "must not be empty");
    cfg.output_directory = *v;
  }
  if (const auto* v = raw.get("output.emit_every")) {
    long long k = parse_int("output.emit_every", *v);
    if (k < 0) throw ConfigError("output.emit_every", "must be >= 0");
    cfg.emit_every = static_cast<int>(k);
  }
  if (const auto* v = raw.get("output.formats")) {
    cfg.formats = split_list(*v);
    if (cfg.formats.empty()) throw ConfigError("output.formats", "format list is empty");
    for (const std::string& f : cfg.formats) {
      if (f != "ppm" && f != "csv" && f != "json") {
        throw ConfigError("output.formats", "unknown format '" + f + "'");
      }
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), overrides);
}

}  // namespace reno
