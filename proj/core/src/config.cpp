#include "fedshield/config.hpp"

#include <toml.hpp>

#include <fstream>
#include <map>
#include <sstream>

#include "fedshield/errors.hpp"

namespace fedshield::config {

namespace {

// Every accepted dotted key.
const std::map<std::string, std::string, std::less<>>& aliases() {
  static const std::map<std::string, std::string, std::less<>> table = {
      {"beta", "lmtv.beta"},
      {"theta", "klad.theta"},
      {"master_seed", "seed"},
      {"client_count", "clients"},
  };
  return table;
}

constexpr std::string_view kKnownKeys[] = {
    "seed", "clients", "rounds", "gamma", "defense", "key_bits", "evict_flagged",
    "transport", "threads",
    "data.source", "data.classes", "data.per_class", "data.test_per_class",
    "data.dim", "data.spread", "data.train_images", "data.train_labels",
    "data.test_images", "data.test_labels",
    "attack.source_class", "attack.target_class", "attack.flip_fraction",
    "attack.bidirectional",
    "model.hidden",
    "train.learning_rate", "train.epochs", "train.batch_size",
    "lmtv.beta", "lmtv.absolute_floor",
    "klad.theta", "klad.bins", "klad.smoothing", "klad.reference_mode",
    "klad.references",
    "codec.fraction_bits", "codec.magnitude_bound",
};

bool known(std::string_view key) {
  for (auto k : kKnownKeys) {
    if (k == key) return true;
  }
  return false;
}

void check_keys(const toml::table& table, const std::string& prefix) {
  for (const auto& [k, node] : table) {
    const std::string key = prefix.empty() ? std::string(k.str())
                                           : prefix + "." + std::string(k.str());
    if (const auto* sub = node.as_table(); sub != nullptr && prefix.empty()) {
      check_keys(*sub, key);
      continue;
    }
    if (!known(key)) throw ConfigError("unknown config key \"" + key + "\"");
  }
}

// Typed reads that name the field on failure.
class Reader {
 public:
  explicit Reader(const toml::table& root) : root_(root) {}

  template <typename T>
  void read(std::string_view key, T& out) const {
    const toml::node_view<const toml::node> node = root_.at_path(key);
    if (!node) return;
    if constexpr (std::is_same_v<T, bool>) {
      if (auto v = node.value_exact<bool>()) {
        out = *v;
        return;
      }
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (auto v = node.value_exact<std::string>()) {
        out = *v;
        return;
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (auto v = node.value<double>()) {
        out = *v;
        return;
      }
    } else {
      if (auto v = node.value_exact<std::int64_t>()) {
        if (*v < 0) throw ConfigError(std::string(key) + " must be non-negative");
        out = static_cast<T>(*v);
        return;
      }
    }
    throw ConfigError("config key \"" + std::string(key) + "\" has the wrong type");
  }

  void read_sizes(std::string_view key, std::vector<std::size_t>& out) const {
    const auto node = root_.at_path(key);
    if (!node) return;
    const auto* arr = node.as_array();
    if (arr == nullptr) throw ConfigError("config key \"" + std::string(key) +
                                          "\" must be an array of integers");
    out.clear();
    for (const auto& el : *arr) {
      auto v = el.value_exact<std::int64_t>();
      if (!v || *v <= 0) {
        throw ConfigError("config key \"" + std::string(key) +
                          "\" must hold positive integers");
      }
      out.push_back(static_cast<std::size_t>(*v));
    }
  }

 private:
  const toml::table& root_;
};

// Parses an override value as a TOML value; bare words become strings.
toml::table override_value(const Override& o) {
  try {
    return toml::parse("v = " + o.value);
  } catch (const toml::parse_error&) {
    toml::table t;
    t.insert("v", o.value);
    return t;
  }
}

void apply_override(toml::table& root, const Override& o) {
  const std::string key = canonical_key(o.key);
  if (!known(key)) throw ConfigError("unknown override key \"" + o.key + "\"");
  toml::table value = override_value(o);
  toml::node* v = value.get("v");
  const auto dot = key.find('.');
  toml::table* target = &root;
  std::string leaf = key;
  if (dot != std::string::npos) {
    const std::string section = key.substr(0, dot);
    leaf = key.substr(dot + 1);
    if (!root.contains(section)) root.insert(section, toml::table{});
    target = root.get_as<toml::table>(section);
    if (target == nullptr) throw ConfigError("\"" + section + "\" is not a table");
  }
  v->visit([&](auto&& node) { target->insert_or_assign(leaf, node); });
}

template <typename E>
E parse_enum(const std::string& value, std::string_view key,
             std::initializer_list<std::pair<std::string_view, E>> options) {
  for (const auto& [name, e] : options) {
    if (name == value) return e;
  }
  std::string allowed;
  for (const auto& [name, e] : options) {
    allowed += (allowed.empty() ? "" : ", ") + std::string(name);
  }
  throw ConfigError("config key \"" + std::string(key) + "\" must be one of: " + allowed);
}

fl::ExperimentConfig from_table(const toml::table& root) {
  check_keys(root, "");
  const Reader r(root);
  fl::ExperimentConfig cfg;

  r.read("seed", cfg.master_seed);
  r.read("clients", cfg.client_count);
  r.read("rounds", cfg.rounds);
  r.read("gamma", cfg.gamma);
  std::string defense = fl::to_string(cfg.defense);
  r.read("defense", defense);
  cfg.defense = parse_enum<DefenseMode>(defense, "defense",
                                        {{"none", DefenseMode::kNone},
                                         {"lmtv", DefenseMode::kLmtv},
                                         {"klad", DefenseMode::kKlad}});
  r.read("key_bits", cfg.key_bits);
  r.read("evict_flagged", cfg.evict_flagged);
  std::string transport = "inprocess";
  r.read("transport", transport);
  cfg.transport = parse_enum<transport::Kind>(
      transport, "transport",
      {{"inprocess", transport::Kind::kInProcess}, {"tcp", transport::Kind::kTcp}});
  r.read("threads", cfg.threads);

  std::string source = "blobs";
  r.read("data.source", source);
  cfg.data.source = parse_enum<fl::DataSource>(
      source, "data.source", {{"blobs", fl::DataSource::kBlobs}, {"idx", fl::DataSource::kIdx}});
  r.read("data.classes", cfg.data.classes);
  r.read("data.per_class", cfg.data.per_class);
  r.read("data.test_per_class", cfg.data.test_per_class);
  r.read("data.dim", cfg.data.dim);
  r.read("data.spread", cfg.data.spread);
  std::string path;
  auto read_path = [&](std::string_view key, std::filesystem::path& out) {
    path.clear();
    r.read(key, path);
    if (!path.empty()) out = path;
  };
  read_path("data.train_images", cfg.data.train_images);
  read_path("data.train_labels", cfg.data.train_labels);
  read_path("data.test_images", cfg.data.test_images);
  read_path("data.test_labels", cfg.data.test_labels);

  r.read("attack.source_class", cfg.attack.flip.source_class);
  r.read("attack.target_class", cfg.attack.flip.target_class);
  r.read("attack.flip_fraction", cfg.attack.flip.flip_fraction);
  r.read("attack.bidirectional", cfg.attack.bidirectional);

  r.read_sizes("model.hidden", cfg.hidden);

  r.read("train.learning_rate", cfg.train.learning_rate);
  r.read("train.epochs", cfg.train.epochs);
  r.read("train.batch_size", cfg.train.batch_size);

  r.read("lmtv.beta", cfg.lmtv.beta);
  r.read("lmtv.absolute_floor", cfg.lmtv.absolute_floor);

  r.read("klad.theta", cfg.klad.theta);
  r.read("klad.bins", cfg.klad.bin_count);
  r.read("klad.smoothing", cfg.klad.smoothing_epsilon);
  std::string mode = "single_random";
  r.read("klad.reference_mode", mode);
  cfg.klad.reference_mode = parse_enum<klad::ReferenceMode>(
      mode, "klad.reference_mode",
      {{"single_random", klad::ReferenceMode::kSingleRandom},
       {"multi_reference", klad::ReferenceMode::kMultiReference}});
  r.read("klad.references", cfg.klad.references);

  r.read("codec.fraction_bits", cfg.fraction_bits);
  r.read("codec.magnitude_bound", cfg.magnitude_bound);

  cfg.validate();
  return cfg;
}

}  // namespace

std::string canonical_key(std::string_view key) {
  while (!key.empty() && key.front() == '-') key.remove_prefix(1);
  const auto it = aliases().find(key);
  return it == aliases().end() ? std::string(key) : it->second;
}

fl::ExperimentConfig parse(std::string_view toml_text,
                           std::span<const Override> overrides) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config is not valid TOML: " << e.description() << " at line "
        << e.source().begin.line;
    throw ConfigError(msg.str());
  }
  for (const auto& o : overrides) apply_override(root, o);
  return from_table(root);
}

fl::ExperimentConfig load(const std::filesystem::path& path,
                          std::span<const Override> overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  auto cfg = parse(text.str(), overrides);
  // Relative data paths are taken relative to the config file.
  const auto base = path.parent_path();
  for (auto* p : {&cfg.data.train_images, &cfg.data.train_labels, &cfg.data.test_images,
                  &cfg.data.test_labels}) {
    if (!p->empty() && p->is_relative()) *p = base / *p;
  }
  return cfg;
}

std::string render(const fl::ExperimentConfig& cfg) {
  toml::table root;
  root.insert("seed", static_cast<std::int64_t>(cfg.master_seed));
  root.insert("clients", static_cast<std::int64_t>(cfg.client_count));
  root.insert("rounds", static_cast<std::int64_t>(cfg.rounds));
  root.insert("gamma", cfg.gamma);
  root.insert("defense", fl::to_string(cfg.defense));
  root.insert("key_bits", static_cast<std::int64_t>(cfg.key_bits));
  root.insert("evict_flagged", cfg.evict_flagged);
  root.insert("transport",
              cfg.transport == transport::Kind::kTcp ? "tcp" : "inprocess");
  root.insert("threads", static_cast<std::int64_t>(cfg.threads));

  toml::table data;
  data.insert("source", cfg.data.source == fl::DataSource::kIdx ? "idx" : "blobs");
  data.insert("classes", static_cast<std::int64_t>(cfg.data.classes));
  data.insert("per_class", static_cast<std::int64_t>(cfg.data.per_class));
  data.insert("test_per_class", static_cast<std::int64_t>(cfg.data.test_per_class));
  data.insert("dim", static_cast<std::int64_t>(cfg.data.dim));
  data.insert("spread", cfg.data.spread);
  if (cfg.data.source == fl::DataSource::kIdx) {
    data.insert("train_images", cfg.data.train_images.string());
    data.insert("train_labels", cfg.data.train_labels.string());
    data.insert("test_images", cfg.data.test_images.string());
    data.insert("test_labels", cfg.data.test_labels.string());
  }
  root.insert("data", std::move(data));

  toml::table attack;
  attack.insert("source_class", static_cast<std::int64_t>(cfg.attack.flip.source_class));
  attack.insert("target_class", static_cast<std::int64_t>(cfg.attack.flip.target_class));
  attack.insert("flip_fraction", cfg.attack.flip.flip_fraction);
  attack.insert("bidirectional", cfg.attack.bidirectional);
  root.insert("attack", std::move(attack));

  toml::array hidden;
  for (auto h : cfg.hidden) hidden.push_back(static_cast<std::int64_t>(h));
  toml::table model;
  model.insert("hidden", std::move(hidden));
  root.insert("model", std::move(model));

  toml::table train;
  train.insert("learning_rate", cfg.train.learning_rate);
  train.insert("epochs", static_cast<std::int64_t>(cfg.train.epochs));
  train.insert("batch_size", static_cast<std::int64_t>(cfg.train.batch_size));
  root.insert("train", std::move(train));

  toml::table lmtv;
  lmtv.insert("beta", cfg.lmtv.beta);
  lmtv.insert("absolute_floor", cfg.lmtv.absolute_floor);
  root.insert("lmtv", std::move(lmtv));

  toml::table klad;
  klad.insert("theta", cfg.klad.theta);
  klad.insert("bins", static_cast<std::int64_t>(cfg.klad.bin_count));
  klad.insert("smoothing", cfg.klad.smoothing_epsilon);
  klad.insert("reference_mode",
              cfg.klad.reference_mode == klad::ReferenceMode::kMultiReference
                  ? "multi_reference"
                  : "single_random");
  klad.insert("references", static_cast<std::int64_t>(cfg.klad.references));
  root.insert("klad", std::move(klad));

  toml::table codec;
  codec.insert("fraction_bits", static_cast<std::int64_t>(cfg.fraction_bits));
  codec.insert("magnitude_bound", cfg.magnitude_bound);
  root.insert("codec", std::move(codec));

  std::ostringstream out;
  out << root << '\n';
  return out.str();
}

}  // namespace fedshield::config
