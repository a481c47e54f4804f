#include "nlsf/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "nlsf/verify.hpp"

namespace nlsf {

namespace {

using nlohmann::json;

// Object view that records which keys were read so unknown keys can be
// reported by their full path.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("field '" + where() + "': expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  T get(const std::string& key, T fallback) {
    seen_.insert(key);
    if (!j_.contains(key)) return fallback;
    return convert<T>(key);
  }

  template <class T>
  T require(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError("field '" + field(key) + "' is required");
    return convert<T>(key);
  }

  Obj sub(const std::string& key) {
    seen_.insert(key);
    static const json empty = json::object();
    return Obj(j_.contains(key) ? j_.at(key) : empty, field(key));
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError("field '" + field(k) + "' is not recognized");
    }
  }

 private:
  std::string where() const { return path_.empty() ? "<root>" : path_; }

  template <class T>
  T convert(const std::string& key) {
    const json& v = j_.at(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError("field '" + field(key) + "': expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError("field '" + field(key) + "': expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
          throw ConfigError("field '" + field(key) + "': expected a nonnegative integer");
        }
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError("field '" + field(key) + "': expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError("field '" + field(key) + "': expected a string");
    }
    try {
      return v.get<T>();
    } catch (const json::exception&) {
      throw ConfigError("field '" + field(key) + "' has the wrong type");
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class E>
E pick(const std::string& field, const std::string& value, std::initializer_list<std::pair<const char*, E>> options) {
  std::string names;
  for (const auto& [name, e] : options) {
    if (value == name) return e;
    names += names.empty() ? name : std::string(", ") + name;
  }
  throw ConfigError("field '" + field + "': unknown value '" + value + "' (expected one of " + names + ")");
}

std::vector<int> read_ints(Obj& o, const std::string& key, std::vector<int> fallback) {
  if (!o.has(key)) return fallback;
  const json& v = o.raw(key);
  if (!v.is_array()) throw ConfigError("field '" + o.field(key) + "': expected an array of integers");
  std::vector<int> out;
  for (const auto& e : v) {
    if (!e.is_number_integer()) throw ConfigError("field '" + o.field(key) + "': expected an array of integers");
    out.push_back(e.get<int>());
  }
  return out;
}

std::pair<int, int> read_pair(Obj& o, const std::string& key, std::pair<int, int> fallback) {
  const auto v = read_ints(o, key, {fallback.first, fallback.second});
  if (v.size() != 2) throw ConfigError("field '" + o.field(key) + "': expected two integers");
  return {v[0], v[1]};
}

nn::Activation read_activation(Obj& o, const std::string& key, nn::Activation fallback) {
  if (!o.has(key)) return fallback;
  return pick<nn::Activation>(o.field(key), o.require<std::string>(key),
                              {{"relu", nn::Activation::ReLU}, {"tanh", nn::Activation::Tanh},
                               {"identity", nn::Activation::Identity}});
}

std::filesystem::path read_path(Obj& o, const std::string& key, const std::filesystem::path& base, bool must_exist) {
  std::filesystem::path p = o.require<std::string>(key);
  if (p.is_relative()) p = base / p;
  if (must_exist && !std::filesystem::exists(p)) {
    throw ConfigError("field '" + o.field(key) + "': file not found: " + p.string());
  }
  return p;
}

BankSpec read_bank(Obj o) {
  BankSpec b;
  b.kind = pick<BankKind>(o.field("kind"), o.get<std::string>("kind", "dyadic"),
                          {{"dyadic", BankKind::Dyadic}, {"uniform", BankKind::Uniform}});
  b.r = o.get<double>("r", b.r);
  b.S = o.get<int>("S", b.S);
  b.K = o.get<int>("K", b.K);
  o.finish();
  return b;
}

BranchSpec read_branch(Obj o) {
  BranchSpec b;
  b.mode = pick<SpectralMode>(o.field("mode"), o.get<std::string>("mode", "index"),
                              {{"index", SpectralMode::Index}, {"value", SpectralMode::Value}});
  b.J = o.get<int>("J", b.J);
  if (o.has("bank")) b.bank = read_bank(o.sub("bank"));
  const std::string default_gso = b.mode == SpectralMode::Index ? "L" : "N";
  b.gso = pick<GsoKind>(o.field("gso"), o.get<std::string>("gso", default_gso),
                        {{"L", GsoKind::Combinatorial}, {"N", GsoKind::Normalized}});
  b.lambda_max = o.get<double>("lambda_max", 0.0);
  o.finish();
  return b;
}

NlsfConfig read_model(Obj o, bool graph_task) {
  NlsfConfig m;
  if (o.has("branches")) {
    const json& arr = o.raw("branches");
    if (!arr.is_array()) throw ConfigError("field '" + o.field("branches") + "': expected an array");
    m.branches.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      m.branches.push_back(read_branch(Obj(arr[i], o.field("branches") + "[" + std::to_string(i) + "]")));
    }
  }
  m.variant = pick<Variant>(o.field("variant"), o.get<std::string>("variant", "diag"),
                            {{"full", Variant::Full},
                             {"diag", Variant::Diag},
                             {"leading_full", Variant::LeadingFull},
                             {"leading_diag", Variant::LeadingDiag}});
  m.d_tilde = o.get<int>("d_tilde", m.d_tilde);
  m.full_width = o.get<int>("full_width", m.full_width);
  {
    Obj s = o.sub("stability");
    m.stability.a = s.get<double>("a", m.stability.a);
    m.stability.e = s.get<double>("e", m.stability.e);
    s.finish();
  }
  {
    Obj s = o.sub("norm");
    m.norm.p = s.get<double>("p", m.norm.p);
    m.norm.normalized = s.get<bool>("normalized", m.norm.normalized);
    s.finish();
  }
  m.layers = o.get<int>("layers", m.layers);
  m.hidden_width = o.get<int>("hidden_width", m.hidden_width);
  m.psi_hidden = read_ints(o, "psi_hidden", m.psi_hidden);
  m.psi_activation = read_activation(o, "psi_activation", m.psi_activation);
  m.head_hidden = read_ints(o, "head_hidden", m.head_hidden);
  m.head_activation = read_activation(o, "head_activation", m.head_activation);
  const std::string head = o.get<std::string>("graph_head", "pooling");
  m.task = graph_task ? pick<Task>(o.field("graph_head"), head,
                                   {{"pooling", Task::Pooling}, {"graph_level", Task::GraphLevel}})
                      : Task::Node;
  m.readout = pick<Readout>(o.field("readout"), o.get<std::string>("readout", "mean"),
                            {{"mean", Readout::Mean}, {"sum", Readout::Sum}, {"max", Readout::Max},
                             {"lp", Readout::LpNorm}});
  m.readout_p = o.get<double>("readout_p", m.readout_p);
  m.pool_activation = read_activation(o, "pool_activation", m.pool_activation);
  o.finish();
  return m;
}

DatasetConfig read_dataset(Obj o, const std::filesystem::path& base) {
  DatasetConfig d;
  d.kind = pick<DatasetConfig::Kind>(o.field("kind"), o.require<std::string>("kind"),
                                     {{"files", DatasetConfig::Kind::NodeFiles},
                                      {"graph_index", DatasetConfig::Kind::GraphIndex},
                                      {"sbm", DatasetConfig::Kind::Sbm},
                                      {"cycle_vs_path", DatasetConfig::Kind::CycleVsPath}});
  d.seed = o.get<std::uint64_t>("seed", 0);
  switch (d.kind) {
    case DatasetConfig::Kind::NodeFiles:
      d.edges = read_path(o, "edges", base, true);
      d.labels = read_path(o, "labels", base, true);
      if (o.has("features")) d.features = read_path(o, "features", base, true);
      d.degree_features = o.get<bool>("degree_features", false);
      break;
    case DatasetConfig::Kind::GraphIndex:
      d.index = read_path(o, "index", base, true);
      d.degree_features = o.get<bool>("degree_features", false);
      break;
    case DatasetConfig::Kind::Sbm:
      d.sbm.block_size = o.get<int>("block_size", d.sbm.block_size);
      d.sbm.p_in = o.get<double>("p_in", d.sbm.p_in);
      d.sbm.p_out = o.get<double>("p_out", d.sbm.p_out);
      d.sbm.feature_dim = o.get<int>("feature_dim", d.sbm.feature_dim);
      d.sbm.seed = d.seed;
      break;
    case DatasetConfig::Kind::CycleVsPath:
      d.count = o.get<int>("count", d.count);
      d.n_min = o.get<int>("n_min", d.n_min);
      d.n_max = o.get<int>("n_max", d.n_max);
      break;
    case DatasetConfig::Kind::None:
      break;
  }
  o.finish();
  return d;
}

std::vector<std::string> verify_suites_or_all(Obj& root) {
  const auto all = verify::suite_names();
  if (!root.has("suites")) {
    return all;
  }
  const json& v = root.raw("suites");
  if (!v.is_array()) throw ConfigError("field 'suites': expected an array of suite names");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) throw ConfigError("field 'suites': expected an array of suite names");
    const auto name = e.get<std::string>();
    if (std::find(all.begin(), all.end(), name) == all.end()) {
      throw ConfigError("field 'suites': unknown suite '" + name + "'");
    }
    out.push_back(name);
  }
  return out;
}

}  // namespace

const char* to_string(RunTask t) {
  switch (t) {
    case RunTask::NodeClassify: return "node";
    case RunTask::GraphClassify: return "graph";
    case RunTask::Verify: return "verify";
    case RunTask::Demo: return "demo";
  }
  return "?";
}

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  Obj root(j, "");
  RunConfig cfg;
  cfg.task = pick<RunTask>("task", root.require<std::string>("task"),
                           {{"node", RunTask::NodeClassify},
                            {"graph", RunTask::GraphClassify},
                            {"verify", RunTask::Verify},
                            {"demo", RunTask::Demo}});
  cfg.seed = root.get<std::uint64_t>("seed", 0);
  if (root.has("out")) {
    std::filesystem::path out = root.require<std::string>("out");
    cfg.out = out.is_relative() ? base / out : out;
  }
  if (root.has("cache_dir")) {
    std::filesystem::path c = root.require<std::string>("cache_dir");
    cfg.cache_dir = c.is_relative() ? base / c : c;
  }
  cfg.train.workers = root.get<int>("workers", 1);
  cfg.repeats = root.get<int>("repeats", 1);
  if (cfg.repeats < 1) throw ConfigError("field 'repeats' must be >= 1");

  const bool learning = cfg.task == RunTask::NodeClassify || cfg.task == RunTask::GraphClassify;
  if (learning) {
    cfg.dataset = read_dataset(root.sub("dataset"), base);
    const bool graph = cfg.task == RunTask::GraphClassify;
    const bool graph_data =
        cfg.dataset.kind == DatasetConfig::Kind::GraphIndex || cfg.dataset.kind == DatasetConfig::Kind::CycleVsPath;
    if (graph != graph_data) throw ConfigError("field 'dataset.kind' does not match task '" + std::string(to_string(cfg.task)) + "'");
    cfg.model = read_model(root.sub("model"), graph);

    Obj t = root.sub("train");
    cfg.train.adam.lr = t.get<double>("lr", cfg.train.adam.lr);
    cfg.train.adam.weight_decay = t.get<double>("weight_decay", cfg.train.adam.weight_decay);
    cfg.train.epochs = t.get<int>("epochs", cfg.train.epochs);
    cfg.train.patience = t.get<int>("patience", graph ? 100 : 200);
    t.finish();
    try {
      cfg.train.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("field 'train': ") + e.what());
    }

    if (!graph) {
      Obj s = root.sub("split");
      const std::string kind = s.get<std::string>("kind", "per_class");
      cfg.split.kind = pick<SplitSpec::Kind>(s.field("kind"), kind,
                                             {{"per_class", SplitSpec::Kind::PerClass},
                                              {"fraction", SplitSpec::Kind::Fraction}});
      cfg.split.per_class = s.get<int>("per_class", cfg.split.per_class);
      cfg.split.val = s.get<int>("val", cfg.split.val);
      cfg.split.test = s.get<int>("test", cfg.split.test);
      cfg.split.train_frac = s.get<double>("train_frac", cfg.split.train_frac);
      cfg.split.val_frac = s.get<double>("val_frac", cfg.split.val_frac);
      s.finish();
    }
  } else if (cfg.task == RunTask::Verify) {
    cfg.suites = verify_suites_or_all(root);
  } else {
    Obj d = root.sub("demo");
    cfg.demo.M = d.get<int>("M", cfg.demo.M);
    cfg.demo.t_low = read_pair(d, "t_low", cfg.demo.t_low);
    cfg.demo.t_high = read_pair(d, "t_high", cfg.demo.t_high);
    cfg.demo.cutoff = d.get<double>("cutoff", cfg.demo.cutoff);
    d.finish();
  }
  root.finish();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_run_config(ss.str(), path.parent_path().empty() ? "." : path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

int exit_code_for(const std::exception& e) { return dynamic_cast<const ConfigError*>(&e) ? 2 : 1; }

}  // namespace nlsf
