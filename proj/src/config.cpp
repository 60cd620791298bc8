#include "crosscbr/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "crosscbr/errors.hpp"

namespace crosscbr {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string unquote(std::string s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* want) {
  throw ConfigError("invalid value '" + value + "' for " + key + " (expected " + want + ")");
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) bad_value(key, v, "a number");
    return d;
  } catch (const std::logic_error&) {
    bad_value(key, v, "a number");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  if (v.empty() || !std::all_of(v.begin(), v.end(), [](unsigned char c) { return std::isdigit(c); })) {
    bad_value(key, v, "a non-negative integer");
  }
  try {
    return std::stoull(v);
  } catch (const std::logic_error&) {
    bad_value(key, v, "a non-negative integer");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  std::string t = v;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  bad_value(key, v, "true or false");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string tok;
  std::stringstream ss(v);
  while (std::getline(ss, tok, ',')) out.push_back(trim(tok));
  return out;
}

template <typename Fn>
auto wrap_errors(const std::string& key, const std::string& value, Fn&& fn) {
  try {
    return fn();
  } catch (const std::invalid_argument&) {
    bad_value(key, value, "a recognised option");
  }
}

std::string value_text(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string out;
    for (const auto& x : v) {
      if (!out.empty()) out += ",";
      out += value_text(x);
    }
    return out;
  }
  return v.dump();
}

std::vector<ConfigField> make_fields() {
  using C = RunConfig;
  std::vector<ConfigField> f;
  const auto num = [&f](std::string key, std::string help, auto member) {
    f.push_back({key, std::move(help),
                 [key, member](C& c, const std::string& v) { member(c) = to_double(key, v); },
                 [member](const C& c) { return Json(member(c)); }});
  };
  const auto count = [&f](std::string key, std::string help, auto member) {
    f.push_back({key, std::move(help),
                 [key, member](C& c, const std::string& v) {
                   member(c) = static_cast<std::remove_reference_t<decltype(member(c))>>(to_u64(key, v));
                 },
                 [member](const C& c) { return Json(member(c)); }});
  };
  const auto flag = [&f](std::string key, std::string help, auto member) {
    f.push_back({key, std::move(help),
                 [key, member](C& c, const std::string& v) { member(c) = to_bool(key, v); },
                 [member](const C& c) { return Json(member(c)); }});
  };

  num("learning_rate", "Adam learning rate", [](auto& c) -> auto& { return c.trainer.learning_rate; });
  count("batch_size", "triples per step", [](auto& c) -> auto& { return c.trainer.batch_size; });
  count("epochs", "maximum number of epochs", [](auto& c) -> auto& { return c.trainer.max_epochs; });
  count("patience", "epochs without validation improvement before stopping",
        [](auto& c) -> auto& { return c.trainer.patience; });
  num("adam_beta1", "Adam first-moment decay", [](auto& c) -> auto& { return c.trainer.adam_beta1; });
  num("adam_beta2", "Adam second-moment decay", [](auto& c) -> auto& { return c.trainer.adam_beta2; });
  num("adam_eps", "Adam epsilon", [](auto& c) -> auto& { return c.trainer.adam_eps; });
  count("seed", "training seed (init, sampling, augmentation)",
        [](auto& c) -> auto& { return c.trainer.seed; });
  f.push_back({"selection_k", "cutoff of the validation NDCG used for model selection",
               [](C& c, const std::string& v) {
                 c.trainer.selection_k = static_cast<int>(to_u64("selection_k", v));
               },
               [](const C& c) { return Json(c.trainer.selection_k); }});
  count("dim", "embedding dimensionality", [](auto& c) -> auto& { return c.trainer.model.dim; });
  count("layers", "propagation depth K", [](auto& c) -> auto& { return c.trainer.model.layers; });
  f.push_back({"aug", "augmentation: OP, ED or MD",
               [](C& c, const std::string& v) {
                 c.trainer.model.augmentation.mode =
                     wrap_errors("aug", v, [&] { return parse_augmentation_mode(v); });
               },
               [](const C& c) { return Json(to_string(c.trainer.model.augmentation.mode)); }});
  num("dropout", "edge/message dropout ratio",
      [](auto& c) -> auto& { return c.trainer.model.augmentation.dropout_ratio; });
  flag("self_connections", "add self-loops to the U-B graph",
       [](auto& c) -> auto& { return c.trainer.model.graph.include_self_connections; });
  flag("bundle_bundle", "add bundle-bundle overlap edges to the U-B graph",
       [](auto& c) -> auto& { return c.trainer.model.graph.include_bundle_bundle; });
  num("lambda1", "contrastive loss weight", [](auto& c) -> auto& { return c.trainer.loss.lambda1; });
  num("lambda2", "L2 weight", [](auto& c) -> auto& { return c.trainer.loss.lambda2; });
  num("tau", "contrastive temperature", [](auto& c) -> auto& { return c.trainer.loss.tau; });
  f.push_back({"mode", "loss mode: full, no_CL, align_only or disperse_only",
               [](C& c, const std::string& v) {
                 c.trainer.loss.mode = wrap_errors("mode", v, [&] { return parse_loss_mode(v); });
               },
               [](const C& c) { return Json(to_string(c.trainer.loss.mode)); }});
  flag("bpr_mean", "divide the BPR sum by the batch size",
       [](auto& c) -> auto& { return c.trainer.loss.bpr_mean; });
  f.push_back({"split_ratios", "train,validation,test fractions",
               [](C& c, const std::string& v) {
                 const auto parts = split_list(v);
                 if (parts.size() != 3) bad_value("split_ratios", v, "three comma-separated fractions");
                 c.split_ratios = {to_double("split_ratios", parts[0]),
                                   to_double("split_ratios", parts[1]),
                                   to_double("split_ratios", parts[2])};
               },
               [](const C& c) {
                 return Json::array(
                     {c.split_ratios.train, c.split_ratios.validation, c.split_ratios.test});
               }});
  count("split_seed", "seed of the random split", [](auto& c) -> auto& { return c.split_seed; });
  f.push_back({"eval_ks", "comma-separated cutoffs for reported metrics",
               [](C& c, const std::string& v) {
                 std::vector<int> ks;
                 for (const auto& p : split_list(v)) ks.push_back(static_cast<int>(to_u64("eval_ks", p)));
                 if (ks.empty()) bad_value("eval_ks", v, "at least one cutoff");
                 c.eval_ks = std::move(ks);
               },
               [](const C& c) { return Json(c.eval_ks); }});
  flag("mask_validation_at_test", "exclude validation positives when ranking for test",
       [](auto& c) -> auto& { return c.mask_validation_at_test; });
  count("diagnose_sample", "pairs sampled for dispersion (0 = all pairs)",
        [](auto& c) -> auto& { return c.diagnose_sample; });
  return f;
}

}  // namespace

const std::vector<ConfigField>& config_fields() {
  static const std::vector<ConfigField> fields = make_fields();
  return fields;
}

const ConfigField* find_config_field(const std::string& key) {
  for (const auto& f : config_fields()) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

std::string flag_name(const ConfigField& field) {
  std::string name = field.key;
  std::replace(name.begin(), name.end(), '_', '-');
  return "--" + name;
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  const ConfigField* f = find_config_field(key);
  if (f == nullptr) throw ConfigError("unknown config key '" + key + "'");
  f->set(cfg, trim(value));
}

void load_config_file(RunConfig& cfg, const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read config file " + file.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(file.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    apply_setting(cfg, trim(line.substr(0, eq)), unquote(trim(line.substr(eq + 1))));
  }
}

std::string to_config_text(const RunConfig& cfg) {
  std::ostringstream os;
  for (const auto& f : config_fields()) os << f.key << " = " << value_text(f.get(cfg)) << '\n';
  return os.str();
}

Json to_json(const RunConfig& cfg) {
  Json j = Json::object();
  for (const auto& f : config_fields()) j[f.key] = f.get(cfg);
  return j;
}

std::string tool_version() { return "1.0.0"; }

Json to_json(const RunManifest& m) {
  Json j;
  j["tool"] = "crosscbr";
  j["version"] = tool_version();
  j["config"] = to_json(m.config);
  Json source{{"kind", m.source.kind}};
  if (m.source.kind == "synthetic") {
    source["spec"] = m.source.synthetic;
    source["seed"] = m.source.synthetic_seed;
  } else {
    source["path"] = m.source.path;
  }
  j["dataset"] = Json{{"name", m.dataset_name},
                      {"source", source},
                      {"checksum", m.dataset_checksum},
                      {"users", m.users},
                      {"bundles", m.bundles},
                      {"items", m.items}};
  j["seed"] = m.config.trainer.seed;
  Json artifacts = Json::object();
  for (const auto& [k, v] : m.artifacts) artifacts[k] = v;
  j["artifacts"] = artifacts;
  return j;
}

RunManifest manifest_from_json(const Json& j) {
  RunManifest m;
  try {
    for (const auto& [key, value] : j.at("config").items()) {
      apply_setting(m.config, key, value_text(value));
    }
    const Json& ds = j.at("dataset");
    m.dataset_name = ds.at("name").get<std::string>();
    m.dataset_checksum = ds.at("checksum").get<std::uint64_t>();
    m.users = ds.at("users").get<std::size_t>();
    m.bundles = ds.at("bundles").get<std::size_t>();
    m.items = ds.at("items").get<std::size_t>();
    const Json& src = ds.at("source");
    m.source.kind = src.at("kind").get<std::string>();
    if (m.source.kind == "synthetic") {
      m.source.synthetic = src.at("spec").get<std::string>();
      m.source.synthetic_seed = src.at("seed").get<std::uint64_t>();
    } else {
      m.source.path = src.at("path").get<std::string>();
    }
    for (const auto& [k, v] : j.at("artifacts").items()) m.artifacts.emplace_back(k, v.get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

}  // namespace crosscbr
