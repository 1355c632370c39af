#include "mhdpinn/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mhdpinn/errors.hpp"

namespace mhdpinn {

using json = nlohmann::json;

std::string to_string(StabilityTarget t) {
  switch (t) {
    case StabilityTarget::forcing: return "forcing";
    case StabilityTarget::u0: return "u0";
    case StabilityTarget::B0: return "B0";
  }
  return "?";
}

StabilityTarget parse_stability_target(const std::string& name) {
  if (name == "forcing") return StabilityTarget::forcing;
  if (name == "u0") return StabilityTarget::u0;
  if (name == "B0") return StabilityTarget::B0;
  throw ConfigError("unknown stability target '" + name + "' (expected forcing, u0 or B0)");
}

namespace {

std::string escape_pointer(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

// Line of every object key, by JSON pointer. Only run on text that already
// parsed, so it can be lenient.
std::map<std::string, int> locate_keys(const std::string& text) {
  std::map<std::string, int> lines;
  struct Frame {
    std::string path;
    bool object;
    int index = 0;
  };
  std::vector<Frame> stack;
  std::string pending;  // path of the value that follows the last key
  bool expect_key = false;
  int line = 1;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n') {
      ++line;
    } else if (c == '"') {
      std::string s;
      for (++i; i < text.size() && text[i] != '"'; ++i) {
        if (text[i] == '\\' && i + 1 < text.size()) ++i;
        s += text[i];
      }
      if (!stack.empty() && stack.back().object && expect_key) {
        pending = stack.back().path + "/" + escape_pointer(s);
        lines.emplace(pending, line);
        expect_key = false;
      }
    } else if (c == '{' || c == '[') {
      std::string path;
      if (!stack.empty()) {
        path = stack.back().object ? pending
                                   : stack.back().path + "/" + std::to_string(stack.back().index);
      }
      if (!lines.count(path)) lines.emplace(path, line);
      stack.push_back({path, c == '{'});
      expect_key = c == '{';
    } else if (c == '}' || c == ']') {
      if (!stack.empty()) stack.pop_back();
    } else if (c == ',') {
      if (!stack.empty()) {
        if (stack.back().object) expect_key = true;
        else ++stack.back().index;
      }
    }
  }
  return lines;
}

class Source {
 public:
  Source(std::string name, std::map<std::string, int> lines)
      : name_(std::move(name)), lines_(std::move(lines)) {}

  [[noreturn]] void fail(const std::string& pointer, const std::string& msg) const {
    std::string p = pointer;
    int line = 0;
    while (true) {
      auto it = lines_.find(p);
      if (it != lines_.end()) {
        line = it->second;
        break;
      }
      if (p.empty()) break;
      p = p.substr(0, p.rfind('/'));
    }
    const std::string key = pointer.empty() ? "(root)" : pointer;
    throw ConfigError(name_ + ":" + std::to_string(std::max(line, 1)) + ": " + key + ": " + msg);
  }

 private:
  std::string name_;
  std::map<std::string, int> lines_;
};

// One JSON object; keys read through it are marked, finish() rejects the rest.
class Section {
 public:
  Section(const json* j, std::string path, const Source& src)
      : j_(j), path_(std::move(path)), src_(src) {
    if (j_ && !j_->is_object()) src_.fail(path_, "expected an object");
  }

  Section child(const char* key) {
    used_.insert(key);
    if (!j_ || !j_->contains(key)) return Section(nullptr, at(key), src_);
    return Section(&(*j_)[key], at(key), src_);
  }

  bool has(const char* key) const { return j_ && j_->contains(key); }

  void get(const char* key, double& out, const std::function<bool(double)>& ok = {},
           const char* want = nullptr) {
    if (const json* v = value(key)) {
      if (!v->is_number()) src_.fail(at(key), "expected a number");
      const double x = v->get<double>();
      if (ok && !ok(x)) src_.fail(at(key), std::string("must be ") + want);
      out = x;
    }
  }

  template <class Int>
  void get_int(const char* key, Int& out, long long min_value) {
    if (const json* v = value(key)) {
      out = to_int<Int>(*v, at(key), min_value);
    }
  }

  void get(const char* key, bool& out) {
    if (const json* v = value(key)) {
      if (!v->is_boolean()) src_.fail(at(key), "expected true or false");
      out = v->get<bool>();
    }
  }

  template <class T>
  void get_enum(const char* key, T& out, T (*parse)(const std::string&)) {
    if (const json* v = value(key)) {
      if (!v->is_string()) src_.fail(at(key), "expected a string");
      try {
        out = parse(v->get<std::string>());
      } catch (const std::exception& e) {
        src_.fail(at(key), e.what());
      }
    }
  }

  void get(const char* key, std::vector<std::string>& out) {
    if (const json* v = value(key)) {
      if (!v->is_array()) src_.fail(at(key), "expected an array of strings");
      out.clear();
      for (const json& e : *v) {
        if (!e.is_string()) src_.fail(at(key), "expected an array of strings");
        out.push_back(e.get<std::string>());
      }
    }
  }

  void get(const char* key, std::vector<double>& out) {
    if (const json* v = value(key)) {
      if (!v->is_array()) src_.fail(at(key), "expected an array of numbers");
      out.clear();
      for (const json& e : *v) {
        if (!e.is_number()) src_.fail(at(key), "expected an array of numbers");
        out.push_back(e.get<double>());
      }
    }
  }

  template <class Int>
  void get_ints(const char* key, std::vector<Int>& out, long long min_value) {
    if (const json* v = value(key)) {
      if (!v->is_array()) src_.fail(at(key), "expected an array of integers");
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        out.push_back(to_int<Int>((*v)[i], at(key) + "/" + std::to_string(i), min_value));
      }
    }
  }

  void finish() const {
    if (!j_) return;
    for (auto it = j_->begin(); it != j_->end(); ++it) {
      if (!used_.count(it.key())) {
        std::string valid;
        for (const auto& k : used_) valid += (valid.empty() ? "" : ", ") + k;
        src_.fail(at(it.key().c_str()), "unknown key (valid keys: " + valid + ")");
      }
    }
  }

  [[noreturn]] void fail(const char* key, const std::string& msg) const { src_.fail(at(key), msg); }

 private:
  std::string at(const char* key) const { return path_ + "/" + escape_pointer(key); }

  const json* value(const char* key) {
    used_.insert(key);
    if (!j_ || !j_->contains(key)) return nullptr;
    return &(*j_)[key];
  }

  template <class Int>
  Int to_int(const json& v, const std::string& where, long long min_value) const {
    if (!v.is_number_integer()) src_.fail(where, "expected an integer");
    if (v.is_number_unsigned()) {
      const auto u = v.get<unsigned long long>();
      if (min_value > 0 && u < static_cast<unsigned long long>(min_value)) {
        src_.fail(where, "must be >= " + std::to_string(min_value));
      }
      return static_cast<Int>(u);
    }
    const auto x = v.get<long long>();
    if (x < min_value) src_.fail(where, "must be >= " + std::to_string(min_value));
    return static_cast<Int>(x);
  }

  const json* j_;
  std::string path_;
  const Source& src_;
  std::set<std::string> used_;
};

const auto positive = [](double x) { return x > 0.0 && std::isfinite(x); };
const auto nonnegative = [](double x) { return x >= 0.0 && std::isfinite(x); };
const auto finite = [](double x) { return std::isfinite(x); };

void read_run(Section& root, RunConfig& r) {
  root.get_int("seed", r.seed, 0);

  Section phys = root.child("physics");
  phys.get("nu", r.physics.nu, positive, "> 0");
  phys.get("mu", r.physics.mu, positive, "> 0");
  phys.get("S", r.physics.S, positive, "> 0");
  phys.get("T", r.physics.T, positive, "> 0");
  {
    Section dom = phys.child("domain");
    dom.get("x0", r.physics.domain.x0, finite, "finite");
    dom.get("x1", r.physics.domain.x1, finite, "finite");
    dom.get("y0", r.physics.domain.y0, finite, "finite");
    dom.get("y1", r.physics.domain.y1, finite, "finite");
    if (!(r.physics.domain.width() > 0.0) || !(r.physics.domain.height() > 0.0)) {
      dom.fail("x1", "domain needs x0 < x1 and y0 < y1");
    }
    dom.finish();
  }
  phys.finish();

  Section prob = root.child("problem");
  prob.get_enum("kind", r.problem.kind, &parse_problem);
  prob.get("forcing_perturbation", r.problem.forcing, finite, "finite");
  prob.get("u0_perturbation", r.problem.u0, finite, "finite");
  prob.get("B0_perturbation", r.problem.B0, finite, "finite");
  prob.finish();

  Section net = root.child("network");
  net.get_ints("layer_sizes", r.network.layer_sizes, 1);
  if (net.has("layer_sizes")) {
    const auto& s = r.network.layer_sizes;
    if (s.size() < 2 || s.front() != kNumInputs || s.back() != kNumOutputs) {
      net.fail("layer_sizes", "must start with 3 and end with 5");
    }
  }
  net.get_enum("activation", r.network.activation, &parse_activation);
  net.get_enum("layout", r.network.layout, &parse_layout);
  net.finish();

  Section loss = root.child("loss_weights");
  for (int i = 0; i < kNumLossTerms; ++i) {
    loss.get(loss_term_name(i), r.weights.a[i], nonnegative, ">= 0");
  }
  loss.finish();

  Section samp = root.child("sampling");
  samp.get_int("interior", r.sampling.interior, 1);
  samp.get_int("boundary", r.sampling.boundary, 1);
  samp.get_int("initial", r.sampling.initial, 1);
  samp.get_enum("strategy", r.sampling.strategy, &parse_strategy);
  samp.get("resample", r.sampling.resample);
  samp.finish();

  Section opt = root.child("optimizer");
  opt.get("lr", r.optimizer.adam.lr, nonnegative, ">= 0");
  opt.get("beta1", r.optimizer.adam.beta1, [](double x) { return x >= 0.0 && x < 1.0; },
          "in [0, 1)");
  opt.get("beta2", r.optimizer.adam.beta2, [](double x) { return x >= 0.0 && x < 1.0; },
          "in [0, 1)");
  opt.get("eps", r.optimizer.adam.eps, positive, "> 0");
  opt.get_int("steps", r.optimizer.steps, 0);
  opt.get("clip_norm", r.optimizer.clip_norm, nonnegative, ">= 0");
  opt.get_int("lbfgs_iterations", r.optimizer.lbfgs_iterations, 0);
  opt.get_int("lbfgs_history", r.optimizer.lbfgs_history, 1);
  opt.finish();

  Section log = root.child("logging");
  log.get_int("eval_every", r.logging.eval_every, 1);
  log.get_int("checkpoint_every", r.logging.checkpoint_every, 0);
  log.get_ints("checkpoint_steps", r.logging.checkpoint_steps, 0);
  log.get("error_norms", r.logging.error_norms);
  log.get_int("norm_resolution", r.logging.norms.resolution, 32);
  log.get_int("norm_time_slices", r.logging.norms.time_slices, 17);
  log.finish();

  Section rt = root.child("runtime");
  rt.get_int("threads", r.runtime.threads, 1);
  rt.get("deterministic", r.runtime.deterministic);
  rt.get_int("chunk", r.runtime.chunk, 1);
  rt.finish();
}

void read_study(Section& st, StudyConfig& s) {
  st.get("checkpoints", s.checkpoints);
  st.get_int("eval_interior", s.eval_interior, 1);
  st.get_int("eval_boundary", s.eval_boundary, 1);
  st.get_int("eval_initial", s.eval_initial, 1);
  st.get_int("hodge_resolution", s.hodge_resolution, 8);
  st.get("deltas", s.deltas);
  for (double d : s.deltas) {
    if (!std::isfinite(d) || d < 0.0) st.fail("deltas", "entries must be finite and >= 0");
  }
  st.get_enum("target", s.target, &parse_stability_target);
  st.get_int("hodge_N", s.hodge_N, 8);
  st.finish();
}

}  // namespace

ConfigFile parse_config(const std::string& text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + upto, '\n'));
    std::string what = e.what();
    const auto colon = what.rfind(": ");
    throw ConfigError(source + ":" + std::to_string(line) + ": invalid JSON: " +
                      (colon == std::string::npos ? what : what.substr(colon + 2)));
  }
  const Source src(source, locate_keys(text));
  Section root(&j, "", src);

  ConfigFile cfg;
  root.get_int("schema_version", cfg.schema_version, 0);
  if (!root.has("schema_version")) root.fail("schema_version", "missing (expected 1)");
  if (cfg.schema_version != kConfigSchemaVersion) {
    root.fail("schema_version", "unsupported version " + std::to_string(cfg.schema_version) +
                                    " (expected " + std::to_string(kConfigSchemaVersion) + ")");
  }
  read_run(root, cfg.run);
  Section study = root.child("study");
  read_study(study, cfg.study);
  root.finish();

  try {
    cfg.run.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

ConfigFile load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string write_config(const ConfigFile& c) {
  const RunConfig& r = c.run;
  json loss = json::object();
  for (int i = 0; i < kNumLossTerms; ++i) loss[loss_term_name(i)] = r.weights.a[i];
  json j = {
      {"schema_version", c.schema_version},
      {"seed", r.seed},
      {"physics",
       {{"nu", r.physics.nu},
        {"mu", r.physics.mu},
        {"S", r.physics.S},
        {"T", r.physics.T},
        {"domain",
         {{"x0", r.physics.domain.x0},
          {"x1", r.physics.domain.x1},
          {"y0", r.physics.domain.y0},
          {"y1", r.physics.domain.y1}}}}},
      {"problem",
       {{"kind", to_string(r.problem.kind)},
        {"forcing_perturbation", r.problem.forcing},
        {"u0_perturbation", r.problem.u0},
        {"B0_perturbation", r.problem.B0}}},
      {"network",
       {{"layer_sizes", r.network.layer_sizes},
        {"activation", to_string(r.network.activation)},
        {"layout", to_string(r.network.layout)}}},
      {"loss_weights", loss},
      {"sampling",
       {{"interior", r.sampling.interior},
        {"boundary", r.sampling.boundary},
        {"initial", r.sampling.initial},
        {"strategy", to_string(r.sampling.strategy)},
        {"resample", r.sampling.resample}}},
      {"optimizer",
       {{"lr", r.optimizer.adam.lr},
        {"beta1", r.optimizer.adam.beta1},
        {"beta2", r.optimizer.adam.beta2},
        {"eps", r.optimizer.adam.eps},
        {"steps", r.optimizer.steps},
        {"clip_norm", r.optimizer.clip_norm},
        {"lbfgs_iterations", r.optimizer.lbfgs_iterations},
        {"lbfgs_history", r.optimizer.lbfgs_history}}},
      {"logging",
       {{"eval_every", r.logging.eval_every},
        {"checkpoint_every", r.logging.checkpoint_every},
        {"checkpoint_steps", r.logging.checkpoint_steps},
        {"error_norms", r.logging.error_norms},
        {"norm_resolution", r.logging.norms.resolution},
        {"norm_time_slices", r.logging.norms.time_slices}}},
      {"runtime",
       {{"threads", r.runtime.threads},
        {"deterministic", r.runtime.deterministic},
        {"chunk", r.runtime.chunk}}},
      {"study",
       {{"checkpoints", c.study.checkpoints},
        {"eval_interior", c.study.eval_interior},
        {"eval_boundary", c.study.eval_boundary},
        {"eval_initial", c.study.eval_initial},
        {"hodge_resolution", c.study.hodge_resolution},
        {"deltas", c.study.deltas},
        {"target", to_string(c.study.target)},
        {"hodge_N", c.study.hodge_N}}}};
  return j.dump(2) + "\n";
}

}  // namespace mhdpinn
