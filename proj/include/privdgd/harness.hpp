// Copyright 2026 The privdgd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Experiment orchestration: JSON config -> instance -> trace -> reports ->
// artifacts. Config schema is documented in README.md.
//
// Seeds. Every stream hangs off the master seed through DeriveSeed:
//   problem   DeriveSeed(master, "problem")   unless problem.seed is given
//   schedule  DeriveSeed(master, "schedule")  unless schedule.seed is given
//   engine    master (initial states, mixing draws)
//   witness   DeriveSeed(master, "zeta")
// so changing one of them never touches the others.

#ifndef PRIVDGD_HARNESS_HPP_
#define PRIVDGD_HARNESS_HPP_

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "privdgd/adversary.hpp"
#include "privdgd/analysis.hpp"
#include "privdgd/common.hpp"
#include "privdgd/engine.hpp"
#include "privdgd/io.hpp"
#include "privdgd/objectives.hpp"
#include "privdgd/random.hpp"
#include "privdgd/schedules.hpp"
#include "privdgd/topology.hpp"

namespace privdgd {

namespace fs = std::filesystem;
using nlohmann::json;

enum ExitCode { kExitOk = 0, kExitValidation = 1, kExitDivergence = 2, kExitVerification = 3 };

// Pinned verification tolerances for the attack and witness subcommands.
inline constexpr double kWitnessDiscrepancyTol = 1e-12;
inline constexpr double kWitnessZetaTol = 1e-14;
inline constexpr double kDigingGradientTol = 1e-12;
inline constexpr double kAnchorTol = 1e-10;
inline constexpr double kAbIdentityTol = 1e-9;
inline constexpr double kAbOptimumRelTol = 1e-3;

struct ProblemSpec {
  ProblemKind kind = ProblemKind::kQuadraticSensing;
  int m = 5, s = 3, d = 2;
  double sigma = 0.0, noise = 0.1;
  std::optional<uint64_t> seed;
  std::vector<Vec> anchors;
};

struct TopologySpec {
  std::string preset;        // path, ring, star, complete, chorded5
  fs::path edges;            // 1-based edge list, Metropolis weights
  fs::path weights;          // explicit W
};

struct AlgorithmSpec {
  Algorithm algorithm = Algorithm::kPdgDs;
  MixingMode mixing = MixingMode::kFlat;
  ExtraVariant extra = ExtraVariant::kStandard;
};

struct ScheduleSpec {
  Family family = Family::kDiminishingHeterogeneous;
  double scale = 1.0;
  double base = 0.02;
  long t_dev = 0;
  double amplitude = 0.0;
  std::optional<uint64_t> seed;
  bool auto_base = false;  // largest base with a feasible (delta, c)
  double safety = 0.98;
  std::vector<Vec> table;
  std::map<std::pair<int, long>, double> overrides;
};

struct AnalysisSpec {
  bool lyapunov = false;
  bool diminishing_check = false;
  long diminishing_check_horizon = 0;  // 0: iterations
  bool nondiminishing_check = false;
  std::optional<double> delta, c;
  long t_start = 0;
  long nondiminishing_check_horizon = 0;
  double conv_mean = 1e-2;
  bool conv_relative = true;
  double conv_consensus = 1e-6;
};

struct AdversarySpec {
  std::string attack;  // diging, ab, witness
  AdversaryType type = AdversaryType::kHonestButCurious;
  int curious = 0;     // 0-based
  int target = 1;
  long horizon = -1;   // ab: last round used, -1 = all
  std::map<long, double> zeta;
  int random_count = 0;
  double random_range = 3.0;
};

struct CompareSpec {
  std::string label;
  AlgorithmSpec algorithm;
  ScheduleSpec schedule;
};

struct OutputSpec {
  fs::path dir;
  bool messages = true;
  bool states = true;
};

struct ExperimentConfig {
  json raw;  // effective config, echoed into artifacts (without "output")
  std::string name = "experiment";
  uint64_t seed = 1;
  long iterations = 1000;
  ProblemSpec problem;
  TopologySpec topology;
  AlgorithmSpec algorithm;
  ScheduleSpec schedule;
  AnalysisSpec analysis;
  std::optional<AdversarySpec> adversary;
  std::vector<CompareSpec> compare;
  OutputSpec output;
  std::vector<std::string> warnings;

  uint64_t ProblemSeed() const {
    return problem.seed ? *problem.seed : DeriveSeed(seed, "problem");
  }
  uint64_t ScheduleSeed(const ScheduleSpec& s) const {
    return s.seed ? *s.seed : DeriveSeed(seed, "schedule");
  }
  json Echo() const {
    json e = raw;
    e.erase("output");
    return e;
  }
};

namespace harness_internal {

// Typed access with dotted key paths for error messages.
class Node {
 public:
  Node(const json& j, std::string path) : j_(&j), path_(std::move(path)) {}

  const json& raw() const { return *j_; }
  const std::string& path() const { return path_; }
  std::string Sub(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }
  bool Has(const std::string& key) const {
    return j_->is_object() && j_->contains(key) && !(*j_)[key].is_null();
  }
  Node At(const std::string& key) const {
    if (!Has(key)) throw ConfigError(Sub(key), "missing required key");
    return Node((*j_)[key], Sub(key));
  }
  Node Index(size_t i) const {
    return Node((*j_)[i], path_ + "[" + std::to_string(i) + "]");
  }

  std::string Str(const std::string& key) const {
    Node n = At(key);
    if (!n.raw().is_string()) throw ConfigError(n.path(), "expected a string");
    return n.raw().get<std::string>();
  }
  std::string Str(const std::string& key, const std::string& def) const {
    return Has(key) ? Str(key) : def;
  }
  double Num(const std::string& key) const {
    Node n = At(key);
    if (!n.raw().is_number()) throw ConfigError(n.path(), "expected a number");
    const double v = n.raw().get<double>();
    if (!std::isfinite(v)) throw ConfigError(n.path(), "must be finite");
    return v;
  }
  double Num(const std::string& key, double def) const {
    return Has(key) ? Num(key) : def;
  }
  long Int(const std::string& key) const {
    Node n = At(key);
    if (!n.raw().is_number_integer())
      throw ConfigError(n.path(), "expected an integer");
    return n.raw().get<long>();
  }
  long Int(const std::string& key, long def) const {
    return Has(key) ? Int(key) : def;
  }
  uint64_t Seed(const std::string& key) const {
    Node n = At(key);
    if (!n.raw().is_number_integer() ||
        (n.raw().is_number_integer() && !n.raw().is_number_unsigned() &&
         n.raw().get<long long>() < 0))
      throw ConfigError(n.path(), "expected a nonnegative integer seed");
    return n.raw().get<uint64_t>();
  }
  bool Bool(const std::string& key, bool def) const {
    if (!Has(key)) return def;
    Node n = At(key);
    if (!n.raw().is_boolean()) throw ConfigError(n.path(), "expected true or false");
    return n.raw().get<bool>();
  }
  Vec Vector(const std::string& key) const {
    Node n = At(key);
    return n.AsVector();
  }
  Vec AsVector() const {
    if (!j_->is_array() || j_->empty())
      throw ConfigError(path_, "expected a nonempty array of numbers");
    Vec v(static_cast<int>(j_->size()));
    for (size_t i = 0; i < j_->size(); ++i) {
      if (!(*j_)[i].is_number())
        throw ConfigError(path_ + "[" + std::to_string(i) + "]", "expected a number");
      v(static_cast<int>(i)) = (*j_)[i].get<double>();
    }
    return v;
  }

  void RejectUnknown(std::initializer_list<const char*> known) const {
    if (!j_->is_object()) throw ConfigError(path_, "expected an object");
    for (const auto& [k, v] : j_->items()) {
      bool ok = false;
      for (const char* kk : known) ok = ok || k == kk;
      if (!ok) throw ConfigError(Sub(k), "unknown key");
    }
  }

 private:
  const json* j_;
  std::string path_;
};

inline void Require(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw ConfigError(path, what);
}

inline ProblemSpec ParseProblem(const Node& n) {
  n.RejectUnknown({"kind", "m", "s", "d", "sigma", "noise", "seed", "anchors"});
  ProblemSpec p;
  const std::string kind = n.Str("kind", "quadratic-sensing");
  if (kind == "rendezvous") {
    p.kind = ProblemKind::kRendezvous;
    Node a = n.At("anchors");
    Require(a.raw().is_array() && !a.raw().empty(), a.path(),
            "expected a nonempty array of positions");
    for (size_t i = 0; i < a.raw().size(); ++i) p.anchors.push_back(a.Index(i).AsVector());
    p.m = static_cast<int>(p.anchors.size());
    p.d = static_cast<int>(p.anchors[0].size());
    for (size_t i = 0; i < p.anchors.size(); ++i)
      Require(p.anchors[i].size() == p.d, a.Index(i).path(), "dimension differs from the first anchor");
    p.s = p.d;
    p.noise = 0.0;
    if (n.Has("m"))
      Require(n.Int("m") == p.m, n.Sub("m"), "disagrees with the number of anchors");
    return p;
  }
  Require(kind == "quadratic-sensing", n.Sub("kind"),
          "expected quadratic-sensing or rendezvous");
  p.m = static_cast<int>(n.Int("m", 5));
  p.s = static_cast<int>(n.Int("s", 3));
  p.d = static_cast<int>(n.Int("d", 2));
  Require(p.m >= 1, n.Sub("m"), "must be >= 1");
  Require(p.s >= 1, n.Sub("s"), "must be >= 1");
  Require(p.d >= 1, n.Sub("d"), "must be >= 1");
  p.sigma = n.Num("sigma", 0.0);
  Require(p.sigma >= 0.0, n.Sub("sigma"), "must be >= 0");
  p.noise = n.Num("noise", 0.1);
  Require(p.noise >= 0.0, n.Sub("noise"), "must be >= 0");
  if (n.Has("seed")) p.seed = n.Seed("seed");
  return p;
}

inline fs::path Resolve(const fs::path& base, const std::string& p) {
  fs::path q(p);
  return q.is_absolute() ? q : base / q;
}

inline TopologySpec ParseTopology(const Node& n, const fs::path& base) {
  n.RejectUnknown({"preset", "edges", "weights"});
  TopologySpec t;
  int given = 0;
  if (n.Has("preset")) {
    t.preset = n.Str("preset");
    ++given;
  }
  if (n.Has("edges")) {
    t.edges = Resolve(base, n.Str("edges"));
    ++given;
  }
  if (n.Has("weights")) {
    t.weights = Resolve(base, n.Str("weights"));
    ++given;
  }
  Require(given == 1, n.path(), "give exactly one of preset, edges, weights");
  if (!t.preset.empty()) {
    const std::string& s = t.preset;
    Require(s == "path" || s == "ring" || s == "star" || s == "complete" ||
                s == "chorded5",
            n.Sub("preset"), "unknown preset '" + s + "'");
  }
  return t;
}

inline AlgorithmSpec ParseAlgorithm(const Node& n) {
  AlgorithmSpec a;
  std::string name;
  if (n.raw().is_string()) {
    name = n.raw().get<std::string>();
  } else {
    n.RejectUnknown({"name", "mixing", "extra_variant"});
    name = n.Str("name");
    const std::string mix = n.Str("mixing", "flat");
    Require(mix == "flat" || mix == "identity", n.Sub("mixing"),
            "expected flat or identity");
    a.mixing = mix == "identity" ? MixingMode::kIdentity : MixingMode::kFlat;
    const std::string ev = n.Str("extra_variant", "standard");
    Require(ev == "standard" || ev == "squared", n.Sub("extra_variant"),
            "expected standard or squared");
    a.extra = ev == "squared" ? ExtraVariant::kSquared : ExtraVariant::kStandard;
  }
  try {
    a.algorithm = privdgd::ParseAlgorithm(name);
  } catch (const UnsupportedError& e) {
    throw ConfigError(n.raw().is_string() ? n.path() : n.Sub("name"), e.what());
  }
  return a;
}

inline ScheduleSpec ParseSchedule(const Node& n, int m) {
  n.RejectUnknown({"family", "scale", "lambda_base", "t_dev", "amplitude", "seed",
                   "auto_base", "safety", "table", "overrides"});
  ScheduleSpec s;
  try {
    s.family = ParseFamily(n.Str("family"));
  } catch (const Error& e) {
    throw ConfigError(n.Sub("family"), e.what());
  }
  s.scale = n.Num("scale", 1.0);
  Require(s.scale > 0.0, n.Sub("scale"), "must be > 0");
  s.base = n.Num("lambda_base", 0.02);
  Require(s.base >= 0.0, n.Sub("lambda_base"), "must be >= 0");
  s.t_dev = n.Int("t_dev", 0);
  Require(s.t_dev >= 0, n.Sub("t_dev"), "must be >= 0");
  s.amplitude = n.Num("amplitude", 0.0);
  Require(s.amplitude >= 0.0, n.Sub("amplitude"), "must be >= 0");
  if (n.Has("seed")) s.seed = n.Seed("seed");
  s.auto_base = n.Bool("auto_base", false);
  Require(!s.auto_base || !IsDiminishing(s.family), n.Sub("auto_base"),
          "only applies to non-diminishing families");
  s.safety = n.Num("safety", 0.98);
  Require(s.safety > 0.0 && s.safety <= 1.0, n.Sub("safety"), "must lie in (0, 1]");
  if (s.family == Family::kCustom) {
    Node t = n.At("table");
    Require(t.raw().is_array() && !t.raw().empty(), t.path(),
            "expected a nonempty array of per-agent rows");
    for (size_t k = 0; k < t.raw().size(); ++k) {
      Vec row = t.Index(k).AsVector();
      Require(row.size() == m, t.Index(k).path(), "needs one entry per agent");
      Require((row.array() >= 0.0).all(), t.Index(k).path(), "stepsizes must be >= 0");
      s.table.push_back(row);
    }
  }
  if (n.Has("overrides")) {
    Node o = n.At("overrides");
    Require(o.raw().is_array(), o.path(), "expected an array");
    for (size_t q = 0; q < o.raw().size(); ++q) {
      Node e = o.Index(q);
      e.RejectUnknown({"agent", "k", "value"});
      const long agent = e.Int("agent");
      Require(agent >= 1 && agent <= m, e.Sub("agent"), "agent index out of range");
      const long k = e.Int("k");
      Require(k >= 0, e.Sub("k"), "must be >= 0");
      const double v = e.Num("value");
      Require(v >= 0.0, e.Sub("value"), "must be >= 0");
      s.overrides[{static_cast<int>(agent - 1), k}] = v;
    }
  }
  return s;
}

inline AnalysisSpec ParseAnalysis(const Node& n) {
  n.RejectUnknown({"lyapunov", "diminishing_check", "nondiminishing_check", "convergence"});
  AnalysisSpec a;
  a.lyapunov = n.Bool("lyapunov", false);
  if (n.Has("diminishing_check")) {
    Node t = n.At("diminishing_check");
    if (t.raw().is_boolean()) {
      a.diminishing_check = t.raw().get<bool>();
    } else {
      t.RejectUnknown({"horizon"});
      a.diminishing_check = true;
      a.diminishing_check_horizon = t.Int("horizon", 0);
      Require(a.diminishing_check_horizon >= 0, t.Sub("horizon"), "must be >= 0");
    }
  }
  if (n.Has("nondiminishing_check")) {
    Node t = n.At("nondiminishing_check");
    if (t.raw().is_boolean()) {
      a.nondiminishing_check = t.raw().get<bool>();
    } else {
      t.RejectUnknown({"delta", "c", "T", "horizon"});
      a.nondiminishing_check = true;
      Require(t.Has("delta") == t.Has("c"), t.path(), "give both delta and c, or neither");
      if (t.Has("delta")) {
        a.delta = t.Num("delta");
        a.c = t.Num("c");
        Require(*a.delta > 0.0 && *a.delta < 1.0, t.Sub("delta"), "must lie in (0, 1)");
        Require(*a.c > 0.0 && *a.c < 1.0, t.Sub("c"), "must lie in (0, 1)");
      }
      a.t_start = t.Int("T", 0);
      Require(a.t_start >= 0, t.Sub("T"), "must be >= 0");
      a.nondiminishing_check_horizon = t.Int("horizon", 0);
      Require(a.nondiminishing_check_horizon >= 0, t.Sub("horizon"), "must be >= 0");
    }
  }
  if (n.Has("convergence")) {
    Node c = n.At("convergence");
    c.RejectUnknown({"mean_error", "relative", "consensus"});
    a.conv_mean = c.Num("mean_error", a.conv_mean);
    a.conv_relative = c.Bool("relative", a.conv_relative);
    a.conv_consensus = c.Num("consensus", a.conv_consensus);
    Require(a.conv_mean > 0.0, c.Sub("mean_error"), "must be > 0");
    Require(a.conv_consensus > 0.0, c.Sub("consensus"), "must be > 0");
  }
  return a;
}

inline AdversarySpec ParseAdversary(const Node& n, int m, long iterations) {
  n.RejectUnknown({"attack", "type", "curious", "target", "horizon", "zeta",
                   "random_zeta"});
  AdversarySpec a;
  a.attack = n.Str("attack");
  Require(a.attack == "diging" || a.attack == "ab" || a.attack == "witness",
          n.Sub("attack"), "expected diging, ab or witness");
  const std::string type = n.Str("type", "honest-but-curious");
  Require(type == "honest-but-curious" || type == "eavesdropper", n.Sub("type"),
          "expected honest-but-curious or eavesdropper");
  a.type = type == "eavesdropper" ? AdversaryType::kEavesdropper
                                  : AdversaryType::kHonestButCurious;
  const long curious = n.Int("curious", 1);
  Require(curious >= 1 && curious <= m, n.Sub("curious"), "agent index out of range");
  a.curious = static_cast<int>(curious - 1);
  const long target = n.Int("target", a.attack == "witness" ? 1 : 2);
  Require(target >= 1 && target <= m, n.Sub("target"), "agent index out of range");
  a.target = static_cast<int>(target - 1);
  a.horizon = n.Int("horizon", -1);
  Require(a.horizon >= -1 && a.horizon < iterations, n.Sub("horizon"),
          "must be -1 or a logged round");
  if (n.Has("zeta")) {
    Node z = n.At("zeta");
    Require(z.raw().is_object(), z.path(), "expected an object {\"k\": zeta}");
    for (const auto& [key, v] : z.raw().items()) {
      long k = -1;
      try {
        size_t used = 0;
        k = std::stol(key, &used);
        if (used != key.size()) k = -1;
      } catch (const std::exception&) {
        k = -1;
      }
      Require(k >= 0 && k < iterations, z.Sub(key), "iteration index out of range");
      Require(v.is_number() && std::isfinite(v.get<double>()), z.Sub(key),
              "expected a finite number");
      a.zeta[k] = v.get<double>();
    }
  }
  if (n.Has("random_zeta")) {
    Node r = n.At("random_zeta");
    r.RejectUnknown({"count", "range"});
    a.random_count = static_cast<int>(r.Int("count", 10));
    a.random_range = r.Num("range", 3.0);
    Require(a.random_count >= 1 && a.random_count <= iterations, r.Sub("count"),
            "must lie in 1..iterations");
    Require(a.random_range > 0.0, r.Sub("range"), "must be > 0");
  }
  if (a.attack == "witness" && a.zeta.empty() && a.random_count == 0)
    a.random_count = static_cast<int>(std::min<long>(10, iterations));
  return a;
}

inline void CheckPairing(const AlgorithmSpec& a, const ScheduleSpec& s,
                         const std::string& where, std::vector<std::string>* warn) {
  if (s.family == Family::kCustom) return;
  const bool dim = IsDiminishing(s.family);
  const bool dim_alg = a.algorithm == Algorithm::kPdgDs || a.algorithm == Algorithm::kDgd;
  if (dim != dim_alg) {
    warn->push_back(where + ": " + FamilyName(s.family) + " schedule paired with " +
                    AlgorithmName(a.algorithm) + "; convergence guarantees do not cover this pairing");
  }
}

}  // namespace harness_internal

inline ExperimentConfig ParseConfig(const json& doc, const fs::path& base_dir = ".") {
  namespace hi = harness_internal;
  hi::Node root(doc, "");
  root.RejectUnknown({"name", "seed", "iterations", "problem", "topology",
                      "algorithm", "schedule", "analysis", "adversary",
                      "compare", "output"});
  ExperimentConfig c;
  c.raw = doc;
  c.name = root.Str("name", "experiment");
  c.seed = root.Has("seed") ? root.Seed("seed") : 1;
  c.iterations = root.Int("iterations", 1000);
  hi::Require(c.iterations >= 1, "iterations", "must be >= 1");
  c.problem = hi::ParseProblem(root.At("problem"));
  c.topology = hi::ParseTopology(root.At("topology"), base_dir);
  c.algorithm = hi::ParseAlgorithm(root.At("algorithm"));
  c.schedule = hi::ParseSchedule(root.At("schedule"), c.problem.m);
  if (root.Has("analysis")) c.analysis = hi::ParseAnalysis(root.At("analysis"));
  if (root.Has("adversary"))
    c.adversary = hi::ParseAdversary(root.At("adversary"), c.problem.m, c.iterations);
  if (root.Has("compare")) {
    hi::Node cmp = root.At("compare");
    hi::Require(cmp.raw().is_array(), cmp.path(), "expected an array");
    for (size_t q = 0; q < cmp.raw().size(); ++q) {
      hi::Node e = cmp.Index(q);
      e.RejectUnknown({"label", "algorithm", "schedule"});
      CompareSpec cs;
      cs.algorithm = hi::ParseAlgorithm(e.At("algorithm"));
      cs.schedule = hi::ParseSchedule(e.At("schedule"), c.problem.m);
      cs.label = e.Str("label", AlgorithmName(cs.algorithm.algorithm));
      for (char ch : cs.label)
        hi::Require(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_',
                    e.Sub("label"), "use letters, digits, '-' or '_'");
      hi::CheckPairing(cs.algorithm, cs.schedule, e.path(), &c.warnings);
      c.compare.push_back(cs);
    }
  }
  c.output.dir = fs::path("out") / c.name;
  if (root.Has("output")) {
    hi::Node o = root.At("output");
    if (o.raw().is_string()) {
      c.output.dir = o.raw().get<std::string>();
    } else {
      o.RejectUnknown({"dir", "messages", "states"});
      if (o.Has("dir")) c.output.dir = o.Str("dir");
      c.output.messages = o.Bool("messages", true);
      c.output.states = o.Bool("states", true);
    }
  }
  hi::CheckPairing(c.algorithm, c.schedule, "schedule", &c.warnings);
  if (c.adversary) {
    const AdversarySpec& a = *c.adversary;
    const Algorithm alg = c.algorithm.algorithm;
    if (a.attack == "diging" && alg != Algorithm::kDiging)
      throw ConfigError("adversary.attack", "diging attack needs algorithm diging");
    if (a.attack == "ab" && alg != Algorithm::kAbTv)
      throw ConfigError("adversary.attack", "ab attack needs algorithm ab-tv");
    if (a.attack == "witness" && !IsPdg(alg))
      throw ConfigError("adversary.attack", "witness needs pdg-ds or pdg-nds");
    if (a.attack != "witness" && a.curious == a.target)
      throw ConfigError("adversary.target", "target must differ from the curious agent");
  }
  return c;
}

inline ExperimentConfig LoadConfig(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("<file>", "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError("<document>", std::string("malformed JSON: ") + e.what());
  }
  return ParseConfig(doc, path.has_parent_path() ? path.parent_path() : fs::path("."));
}

// Command-line overrides; the echo follows so artifacts stay self-describing.
inline void ApplyOverrides(ExperimentConfig* c, std::optional<uint64_t> seed,
                           std::optional<long> iterations,
                           std::optional<fs::path> out) {
  if (seed) {
    c->seed = *seed;
    c->raw["seed"] = *seed;
  }
  if (iterations) {
    if (*iterations < 1) throw ConfigError("iterations", "must be >= 1");
    c->iterations = *iterations;
    c->raw["iterations"] = *iterations;
    if (c->adversary) {
      for (const auto& [k, z] : c->adversary->zeta)
        if (k >= *iterations) throw ConfigError("adversary.zeta", "index beyond the new iteration count");
      if (c->adversary->horizon >= *iterations)
        throw ConfigError("adversary.horizon", "beyond the new iteration count");
      c->adversary->random_count =
          static_cast<int>(std::min<long>(c->adversary->random_count, *iterations));
    }
  }
  if (out) c->output.dir = *out;
}

struct Instance {
  Problem problem;
  Optimum optimum;
  Topology topology;
  double L = 0.0;
};

inline Instance BuildInstance(const ExperimentConfig& c) {
  Instance in;
  const ProblemSpec& p = c.problem;
  if (p.kind == ProblemKind::kRendezvous) {
    in.problem = MakeRendezvous(p.anchors);
  } else {
    in.problem = GenerateSensingInstance(p.m, p.s, p.d, p.noise, c.ProblemSeed(), p.sigma);
  }
  try {
    in.optimum = ComputeOptimum(in.problem);
  } catch (const RankDeficiencyError& e) {
    throw ConfigError("problem", e.what());
  }
  in.L = in.problem.LipschitzBound();
  const TopologySpec& t = c.topology;
  try {
    if (!t.preset.empty()) {
      in.topology = Topology::Metropolis(PresetGraph(t.preset, p.m));
    } else if (!t.edges.empty()) {
      in.topology = Topology::Metropolis(LoadEdgeList(t.edges.string(), p.m));
    } else {
      std::ifstream f(t.weights);
      if (!f) throw TopologyError("cannot open " + t.weights.string());
      std::stringstream ss;
      ss << f.rdbuf();
      in.topology = Topology::Custom(ParseMatrix(ss.str()));
    }
  } catch (const Error& e) {
    throw ConfigError("topology", e.what());
  }
  if (in.topology.graph.m() != p.m)
    throw ConfigError("topology", "has " + std::to_string(in.topology.graph.m()) +
                                      " agents, problem has " + std::to_string(p.m));
  return in;
}

// Builds the schedule; with auto_base the base is the largest one for which
// a feasible (delta, c) exists over `horizon`, times the safety factor.
inline StepsizeSchedule BuildSchedule(const ScheduleSpec& s, int m, uint64_t seed,
                                      const Instance& in, long horizon,
                                      double* chosen_base = nullptr) {
  StepsizeSchedule out = [&] {
    switch (s.family) {
      case Family::kDiminishingHeterogeneous:
        return StepsizeSchedule::DiminishingHeterogeneous(m, seed, s.scale);
      case Family::kDiminishingHomogeneous:
        return StepsizeSchedule::DiminishingHomogeneous(m, s.scale);
      case Family::kNondiminishingHeterogeneous:
        return StepsizeSchedule::NondiminishingHeterogeneous(m, s.base, seed);
      case Family::kConstantHomogeneous:
        return StepsizeSchedule::ConstantHomogeneous(m, s.base);
      case Family::kFiniteDeviation:
        return StepsizeSchedule::FiniteDeviation(m, s.base, s.t_dev, s.amplitude, seed);
      case Family::kCustom:
        return StepsizeSchedule::Custom(s.table);
    }
    throw ConfigError("schedule.family", "unhandled family");
  }();
  if (!s.overrides.empty()) out = out.WithOverrides(s.overrides);
  if (s.auto_base) {
    const double b = MaxAdmissibleBase(out, in.L, in.topology.spectral.eta,
                                       in.topology.spectral.r, horizon, s.safety);
    if (!(b > 0.0))
      throw ConfigError("schedule.auto_base", "no positive base admits a feasible (delta, c)");
    out = out.WithBase(b);
  }
  if (chosen_base) *chosen_base = out.base();
  return out;
}

struct RunArtifacts {
  fs::path dir;
  fs::path trace, metrics, messages, states, conditions, lyapunov, adversary, summary;
};

struct ExperimentResult {
  int exit_code = kExitOk;
  std::string verdict;        // one line
  std::vector<std::string> failures;
  std::vector<MetricsRow> metrics;
  ConvergenceSummary convergence;
  double initial_mean_error = 0.0;
  json summary;
  RunArtifacts artifacts;
};

namespace harness_internal {

inline std::string WithEcho(const std::string& csv, const json& echo) {
  return "# config " + echo.dump() + "\n" + csv;
}

inline std::map<long, double> DrawZeta(uint64_t master, int count, double range,
                                       long iterations) {
  Stream s(DeriveSeed(master, "zeta"));
  std::map<long, double> z;
  while (static_cast<int>(z.size()) < count) {
    const long k = std::min<long>(iterations - 1,
                                  static_cast<long>(s.Uniform() * iterations));
    if (z.count(k)) continue;
    z[k] = s.Uniform(-range, range);
  }
  return z;
}

// Runs the configured attack or witness on a trace. Sets *ok to the pinned
// verification outcome.
inline json RunAdversary(const ExperimentConfig& c, const AdversarySpec& a,
                         const Trace& tr, const Optimum& opt, bool* ok) {
  json j;
  j["attack"] = a.attack;
  j["target"] = a.target + 1;
  if (a.attack == "diging") {
    AdversaryView view = ProjectView(tr, AdversaryType::kHonestButCurious, a.curious);
    const DigingEstimate est = InferDigingGradient(view, a.target);
    const Vec g1 = tr.ledger.gradients[1].row(a.target).transpose();
    const Vec x1 = tr.states[1].x.row(a.target).transpose();
    const double g_err = (est.g1 - g1).cwiseAbs().maxCoeff();
    const double x_err = (est.x1 - x1).cwiseAbs().maxCoeff();
    j["curious"] = a.curious + 1;
    j["estimate"] = {{"x1", VecToJson(est.x1)}, {"g1", VecToJson(est.g1)}};
    j["ledger"] = {{"x1", VecToJson(x1)}, {"g1", VecToJson(g1)}};
    j["abs_error_g1"] = g_err;
    j["abs_error_x1"] = x_err;
    j["tolerance_g1"] = kDigingGradientTol;
    *ok = g_err <= kDigingGradientTol;
    if (tr.problem.kind == ProblemKind::kRendezvous) {
      const Vec anchor = RecoverRendezvousAnchor(est);
      const double a_err = (anchor - tr.problem.z[a.target]).cwiseAbs().maxCoeff();
      j["anchor_estimate"] = VecToJson(anchor);
      j["anchor_true"] = VecToJson(tr.problem.z[a.target]);
      j["abs_error_anchor"] = a_err;
      *ok = *ok && a_err <= kAnchorTol;
    }
  } else if (a.attack == "ab") {
    AdversaryView view = ProjectView(tr, AdversaryType::kHonestButCurious, a.curious);
    const long h = a.horizon < 0 ? tr.iterations - 1 : a.horizon;
    const AbEstimate est = InferAbGradient(view, a.target, h);
    // Exact target: g_j^{h+1} - y_j^{h+1}.
    const Vec exact = (tr.ledger.gradients[h + 1].row(a.target) -
                       tr.states[h + 1].y.row(a.target)).transpose();
    const double id_err = (est.final - exact).norm() / (1.0 + exact.norm());
    const Vec g_star = tr.problem.Gradient(a.target, opt.theta_star);
    const double opt_err = (est.final - g_star).norm() / std::max(g_star.norm(), 1.0);
    j["curious"] = a.curious + 1;
    j["horizon"] = h;
    j["estimate"] = VecToJson(est.final);
    j["gradient_at_optimum"] = VecToJson(g_star);
    j["identity_error"] = id_err;
    j["identity_tolerance"] = kAbIdentityTol;
    j["relative_error_to_optimum_gradient"] = opt_err;
    j["optimum_gradient_matched"] = opt_err <= kAbOptimumRelTol;
    *ok = id_err <= kAbIdentityTol;
  } else {
    std::map<long, double> zeta = a.zeta;
    if (zeta.empty())
      zeta = DrawZeta(c.seed, a.random_count, a.random_range, tr.iterations);
    const WitnessResult w = ConstructWitness(tr, a.target, zeta);
    j["witness"] = WitnessToJson(w);
    j["tolerance_discrepancy"] = kWitnessDiscrepancyTol;
    j["tolerance_zeta"] = kWitnessZetaTol;
    *ok = w.max_discrepancy <= kWitnessDiscrepancyTol &&
          w.max_zeta_error <= kWitnessZetaTol;
  }
  j["verified"] = *ok;
  return j;
}

}  // namespace harness_internal

// Schedule conditions only; no engine run.
struct ScheduleCheck {
  std::optional<ConditionReport> diminishing_check, nondiminishing_check;
  std::optional<std::pair<double, double>> feasible;
  double base = 0.0;
};

inline ScheduleCheck CheckSchedule(const ExperimentConfig& c, const Instance& in,
                                   const StepsizeSchedule& s) {
  ScheduleCheck out;
  out.base = s.base();
  const AnalysisSpec& a = c.analysis;
  const bool dim = IsDiminishing(s.family());
  const bool want1 = a.diminishing_check || (!a.nondiminishing_check && (dim || s.family() == Family::kCustom));
  const bool want3 = a.nondiminishing_check || (!a.diminishing_check && !dim);
  if (want1) {
    const long h = a.diminishing_check_horizon > 0 ? a.diminishing_check_horizon : c.iterations;
    out.diminishing_check = CheckDiminishingConditions(s, h);
  }
  if (want3) {
    const long h = a.nondiminishing_check_horizon > 0 ? a.nondiminishing_check_horizon : c.iterations;
    const auto& sp = in.topology.spectral;
    if (a.delta) {
      out.feasible = std::make_pair(*a.delta, *a.c);
    } else {
      out.feasible = FindFeasibleDeltaC(s, in.L, sp.eta, sp.r, s.m(), h, a.t_start);
    }
    const auto dc = out.feasible ? *out.feasible : std::make_pair(0.5, 0.5);
    out.nondiminishing_check = CheckNondiminishingConditions(s, in.L, sp.eta, sp.r, s.m(), dc.first, dc.second,
                                 h, a.t_start);
    if (!out.feasible)
      out.nondiminishing_check->notes.push_back("no feasible (delta, c) on the 0.05 grid; "
                                    "report shown for delta = c = 0.5");
  }
  return out;
}

inline json ScheduleCheckToJson(const ScheduleCheck& s) {
  json j = json::object();
  if (s.diminishing_check) j["diminishing"] = ReportToJson(*s.diminishing_check);
  if (s.nondiminishing_check) {
    j["non_diminishing"] = ReportToJson(*s.nondiminishing_check);
    j["feasible_delta_c"] = s.feasible ? json{s.feasible->first, s.feasible->second} : json();
  }
  j["lambda_base"] = s.base;
  return j;
}

inline bool ScheduleFails(const ScheduleCheck& s) {
  return (s.diminishing_check && s.diminishing_check->overall == Verdict::kFail) ||
         (s.nondiminishing_check && s.nondiminishing_check->overall == Verdict::kFail);
}

enum class Mode { kRun, kCheckSchedule, kAttack, kWitness };

inline std::string ModeName(Mode m) {
  switch (m) {
    case Mode::kRun: return "run";
    case Mode::kCheckSchedule: return "check-schedule";
    case Mode::kAttack: return "attack";
    case Mode::kWitness: return "witness";
  }
  return "?";
}

// Full pipeline. Validation problems raise ConfigError, divergence raises
// DivergenceError; verification failures come back as exit_code 3.
inline ExperimentResult RunExperiment(const ExperimentConfig& c, Mode mode = Mode::kRun) {
  namespace hi = harness_internal;
  if (mode == Mode::kAttack &&
      (!c.adversary || c.adversary->attack == "witness"))
    throw ConfigError("adversary.attack", "attack needs a diging or ab adversary section");
  if (mode == Mode::kWitness && (!c.adversary || c.adversary->attack != "witness"))
    throw ConfigError("adversary.attack", "witness needs attack = \"witness\"");

  ExperimentResult res;
  const json echo = c.Echo();
  const fs::path dir = c.output.dir;
  fs::create_directories(dir);
  res.artifacts.dir = dir;

  const Instance in = BuildInstance(c);
  const int m = c.problem.m;
  double base = 0.0;
  StepsizeSchedule sched =
      BuildSchedule(c.schedule, m, c.ScheduleSeed(c.schedule), in, c.iterations, &base);

  json summary;
  summary["name"] = c.name;
  summary["mode"] = ModeName(mode);
  summary["warnings"] = c.warnings;
  summary["seeds"] = {{"master", c.seed},
                      {"problem", c.ProblemSeed()},
                      {"schedule", c.ScheduleSeed(c.schedule)}};
  summary["eta"] = in.topology.spectral.eta;
  summary["r"] = in.topology.spectral.r;
  summary["L"] = in.L;
  summary["theta_star"] = VecToJson(in.optimum.theta_star);
  if (c.schedule.auto_base) summary["lambda_base_selected"] = base;

  // Schedule conditions.
  const bool want_sched = mode == Mode::kCheckSchedule || c.analysis.diminishing_check ||
                          c.analysis.nondiminishing_check;
  std::optional<ScheduleCheck> sc;
  if (want_sched) {
    sc = CheckSchedule(c, in, sched);
    json cj = ScheduleCheckToJson(*sc);
    cj["config"] = echo;
    res.artifacts.conditions = dir / "condition_report.json";
    WriteJson(res.artifacts.conditions, cj);
    json v;
    if (sc->diminishing_check) v["diminishing"] = VerdictName(sc->diminishing_check->overall);
    if (sc->nondiminishing_check) v["non_diminishing"] = VerdictName(sc->nondiminishing_check->overall);
    summary["schedule_verdicts"] = v;
  }
  if (mode == Mode::kCheckSchedule) {
    const bool fail = ScheduleFails(*sc);
    res.exit_code = fail ? kExitVerification : kExitOk;
    std::string line = c.name + " check-schedule:";
    if (sc->diminishing_check) line += " diminishing=" + VerdictName(sc->diminishing_check->overall);
    if (sc->nondiminishing_check) {
      line += " non-diminishing=" + VerdictName(sc->nondiminishing_check->overall);
      if (sc->feasible)
        line += " delta=" + Num(sc->feasible->first) + " c=" + Num(sc->feasible->second);
    }
    res.verdict = line;
    summary["status"] = fail ? "failed-verification" : "ok";
    summary["config"] = echo;
    res.summary = summary;
    res.artifacts.summary = dir / "summary.json";
    WriteJson(res.artifacts.summary, summary);
    return res;
  }

  RunOptions ro;
  ro.algorithm = c.algorithm.algorithm;
  ro.iterations = c.iterations;
  ro.master_seed = c.seed;
  ro.mixing = c.algorithm.mixing;
  ro.extra_variant = c.algorithm.extra;
  const Trace tr = Run(in.problem, in.topology, sched, ro);

  res.metrics = ComputeMetrics(tr, in.optimum);
  res.initial_mean_error = res.metrics.front().mean_error;
  const double tol_mean = c.analysis.conv_relative
                              ? c.analysis.conv_mean * res.initial_mean_error
                              : c.analysis.conv_mean;
  res.convergence = DetectConvergence(res.metrics, tol_mean, c.analysis.conv_consensus);

  res.artifacts.metrics = dir / "metrics.csv";
  WriteText(res.artifacts.metrics, hi::WithEcho(MetricsCsv(res.metrics), echo));
  res.artifacts.trace = dir / "trace.json";
  WriteJson(res.artifacts.trace, TraceHeader(tr, echo));
  if (c.output.messages) {
    res.artifacts.messages = dir / "messages.csv";
    WriteText(res.artifacts.messages, hi::WithEcho(MessagesCsv(tr), echo));
  }
  if (c.output.states) {
    res.artifacts.states = dir / "states.csv";
    WriteText(res.artifacts.states, hi::WithEcho(StatesCsv(tr), echo));
  }
  {
    json pj = ProblemToJson(in.problem);
    pj["config"] = echo;
    WriteJson(dir / "problem.json", pj);
  }

  summary["algorithm"] = AlgorithmName(tr.algorithm);
  summary["iterations"] = c.iterations;
  summary["initial_mean_error"] = res.initial_mean_error;
  summary["final"] = {{"mean_error", res.metrics.back().mean_error},
                      {"consensus", res.metrics.back().consensus},
                      {"f_gap", JNum(res.metrics.back().f_gap)}};
  summary["convergence"] = {{"reached", res.convergence.reached},
                            {"round", res.convergence.k},
                            {"mean_error_tolerance", tol_mean},
                            {"consensus_tolerance", c.analysis.conv_consensus}};
  if (IsPdg(tr.algorithm)) {
    const IdentityResiduals id = CheckIdentities(tr);
    summary["identities"] = {{"mean_dynamics", id.mean_dynamics},
                             {"tracker_mean", id.tracker_mean},
                             {"tracker_recursion", id.tracker_recursion}};
  }

  // Lyapunov monitors.
  if (c.analysis.lyapunov) {
    json lj;
    const auto& sp = in.topology.spectral;
    bool holds = true;
    if (tr.algorithm == Algorithm::kPdgDs) {
      const LyapunovReportDS rep = VerifyLyapunovDs(tr, in.optimum, in.L, sp.eta);
      lj = DsReportToJson(rep);
      holds = rep.holds();
    } else if (tr.algorithm == Algorithm::kPdgNds) {
      std::optional<std::pair<double, double>> dc;
      if (sc && sc->feasible) dc = sc->feasible;
      const LyapunovReportNDS rep = VerifyLyapunovNds(tr, in.optimum, in.L, sp.eta, sp.r, dc);
      lj = NdsReportToJson(rep);
      holds = rep.holds();
    } else {
      lj["monitor"] = "none";
      lj["note"] = "no Lyapunov monitor for " + AlgorithmName(tr.algorithm);
      summary["warnings"].push_back(lj["note"]);
    }
    lj["config"] = echo;
    res.artifacts.lyapunov = dir / "lyapunov.json";
    WriteJson(res.artifacts.lyapunov, lj);
    summary["lyapunov"] = {{"holds", holds}, {"min_slack", lj.value("min_slack", json())}};
    if (!holds) res.failures.push_back("negative Lyapunov slack");
  }

  // Adversary.
  std::string adv_line;
  if (c.adversary) {
    bool ok = false;
    json aj = hi::RunAdversary(c, *c.adversary, tr, in.optimum, &ok);
    if (c.output.messages) {
      const AdversaryView view = ProjectView(tr, c.adversary->type, c.adversary->curious);
      WriteJson(dir / "adversary_view.json", ViewToJson(view));
    }
    aj["config"] = echo;
    res.artifacts.adversary = dir / "adversary.json";
    WriteJson(res.artifacts.adversary, aj);
    summary["adversary"] = aj;
    summary["adversary"].erase("config");
    if (!ok) res.failures.push_back(c.adversary->attack + " verification failed");
    if (c.adversary->attack == "diging") {
      adv_line = " g1_abs_error=" + Num(aj["abs_error_g1"].get<double>());
      if (aj.contains("abs_error_anchor"))
        adv_line += " anchor_abs_error=" + Num(aj["abs_error_anchor"].get<double>());
    } else if (c.adversary->attack == "ab") {
      adv_line = " relative_error_to_optimum_gradient=" +
                 Num(aj["relative_error_to_optimum_gradient"].get<double>());
    } else {
      adv_line = " max_discrepancy=" +
                 Num(aj["witness"]["max_relative_discrepancy"].get<double>()) +
                 " max_zeta_error=" +
                 Num(aj["witness"]["max_log_difference_error"].get<double>());
    }
  }

  // Comparison runs share problem, topology and master seed.
  if (!c.compare.empty()) {
    json cmp = json::array();
    for (const CompareSpec& cs : c.compare) {
      double cb = 0.0;
      StepsizeSchedule s2 =
          BuildSchedule(cs.schedule, m, c.ScheduleSeed(cs.schedule), in, c.iterations, &cb);
      RunOptions r2 = ro;
      r2.algorithm = cs.algorithm.algorithm;
      r2.mixing = cs.algorithm.mixing;
      r2.extra_variant = cs.algorithm.extra;
      const Trace t2 = Run(in.problem, in.topology, s2, r2);
      const auto rows = ComputeMetrics(t2, in.optimum);
      const fs::path p = dir / ("metrics_" + cs.label + ".csv");
      WriteText(p, hi::WithEcho(MetricsCsv(rows), echo));
      const ConvergenceSummary cv =
          DetectConvergence(rows, tol_mean, c.analysis.conv_consensus);
      cmp.push_back({{"label", cs.label},
                     {"algorithm", AlgorithmName(t2.algorithm)},
                     {"metrics", p.filename().string()},
                     {"final_mean_error", rows.back().mean_error},
                     {"final_consensus", rows.back().consensus},
                     {"convergence_round", cv.k}});
    }
    summary["compare"] = cmp;
  }

  res.exit_code = res.failures.empty() ? kExitOk : kExitVerification;
  summary["status"] = res.failures.empty() ? "ok" : "failed-verification";
  summary["failures"] = res.failures;
  json files = json::object();
  auto rel = [&](const fs::path& p) { return p.empty() ? json() : json(p.filename().string()); };
  files["trace"] = rel(res.artifacts.trace);
  files["metrics"] = rel(res.artifacts.metrics);
  files["messages"] = rel(res.artifacts.messages);
  files["states"] = rel(res.artifacts.states);
  files["conditions"] = rel(res.artifacts.conditions);
  files["lyapunov"] = rel(res.artifacts.lyapunov);
  files["adversary"] = rel(res.artifacts.adversary);
  summary["files"] = files;
  summary["config"] = echo;
  res.summary = summary;
  res.artifacts.summary = dir / "summary.json";
  WriteJson(res.artifacts.summary, summary);

  std::string line = c.name + " " + ModeName(mode) + ": " +
                     (res.failures.empty() ? "ok" : "FAILED (" + res.failures.front() + ")") +
                     " " + AlgorithmName(tr.algorithm) + " K=" + std::to_string(c.iterations) +
                     " mean_error=" + Num(res.metrics.back().mean_error) +
                     " consensus=" + Num(res.metrics.back().consensus) +
                     " converged_at=" + (res.convergence.reached ? std::to_string(res.convergence.k)
                                                                 : std::string("none"));
  res.verdict = line + adv_line;
  return res;
}

// ---- sweep ----------------------------------------------------------------

struct SeedOutcome {
  uint64_t seed = 0;
  int exit_code = kExitOk;
  std::string error;
  double final_mean_error = NAN;
  double final_consensus = NAN;
  long convergence_round = -1;
};

struct SweepResult {
  std::vector<SeedOutcome> runs;
  double median_mean_error = NAN, iqr_mean_error = NAN;
  double median_consensus = NAN, iqr_consensus = NAN;
  int exit_code = kExitOk;
  std::string verdict;
};

// Linear-interpolated quantile of a sorted sample.
inline double Quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return NAN;
  const double pos = q * (sorted.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - lo) * (sorted[hi] - sorted[lo]);
}

inline SweepResult Sweep(const ExperimentConfig& base, uint64_t first, uint64_t last,
                         unsigned threads = 0) {
  if (last < first) throw ConfigError("--seeds", "empty seed range");
  const size_t n = static_cast<size_t>(last - first + 1);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<size_t>(threads, n));
  SweepResult out;
  out.runs.resize(n);
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t q = next++; q < n; q = next++) {
      ExperimentConfig c = base;
      const uint64_t seed = first + q;
      ApplyOverrides(&c, seed, std::nullopt, base.output.dir / ("seed-" + std::to_string(seed)));
      c.output.messages = false;
      c.output.states = false;
      SeedOutcome& o = out.runs[q];
      o.seed = seed;
      try {
        const ExperimentResult r = RunExperiment(c, Mode::kRun);
        o.exit_code = r.exit_code;
        o.final_mean_error = r.metrics.back().mean_error;
        o.final_consensus = r.metrics.back().consensus;
        o.convergence_round = r.convergence.k;
        if (!r.failures.empty()) o.error = r.failures.front();
      } catch (const DivergenceError& e) {
        o.exit_code = kExitDivergence;
        o.error = e.what();
      } catch (const Error& e) {
        o.exit_code = kExitValidation;
        o.error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::vector<double> me, ce;
  for (const SeedOutcome& o : out.runs) {
    if (o.exit_code == kExitOk || o.exit_code == kExitVerification) {
      me.push_back(o.final_mean_error);
      ce.push_back(o.final_consensus);
    }
    if (o.exit_code == kExitValidation) out.exit_code = kExitValidation;
    else if (o.exit_code == kExitDivergence && out.exit_code != kExitValidation)
      out.exit_code = kExitDivergence;
    else if (o.exit_code == kExitVerification && out.exit_code == kExitOk)
      out.exit_code = kExitVerification;
  }
  std::sort(me.begin(), me.end());
  std::sort(ce.begin(), ce.end());
  out.median_mean_error = Quantile(me, 0.5);
  out.iqr_mean_error = Quantile(me, 0.75) - Quantile(me, 0.25);
  out.median_consensus = Quantile(ce, 0.5);
  out.iqr_consensus = Quantile(ce, 0.75) - Quantile(ce, 0.25);

  const json echo = base.Echo();
  std::string csv = "seed,exit_code,final_mean_error,final_consensus,convergence_round\n";
  json runs = json::array();
  for (const SeedOutcome& o : out.runs) {
    csv += std::to_string(o.seed) + "," + std::to_string(o.exit_code) + "," +
           Num(o.final_mean_error) + "," + Num(o.final_consensus) + "," +
           std::to_string(o.convergence_round) + "\n";
    runs.push_back({{"seed", o.seed},
                    {"exit_code", o.exit_code},
                    {"final_mean_error", JNum(o.final_mean_error)},
                    {"final_consensus", JNum(o.final_consensus)},
                    {"convergence_round", o.convergence_round},
                    {"error", o.error}});
  }
  WriteText(base.output.dir / "sweep.csv", harness_internal::WithEcho(csv, echo));
  json sj;
  sj["seeds"] = {first, last};
  sj["runs"] = runs;
  sj["final_mean_error"] = {{"median", JNum(out.median_mean_error)},
                            {"iqr", JNum(out.iqr_mean_error)}};
  sj["final_consensus"] = {{"median", JNum(out.median_consensus)},
                           {"iqr", JNum(out.iqr_consensus)}};
  sj["exit_code"] = out.exit_code;
  sj["config"] = echo;
  WriteJson(base.output.dir / "sweep_summary.json", sj);
  out.verdict = base.name + " sweep: " + std::to_string(me.size()) + "/" +
                std::to_string(n) + " runs completed, median mean_error=" +
                Num(out.median_mean_error) + " iqr=" + Num(out.iqr_mean_error) +
                " median consensus=" + Num(out.median_consensus);
  return out;
}

}  // namespace privdgd

#endif  // PRIVDGD_HARNESS_HPP_
