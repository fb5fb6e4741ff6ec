#include "cli.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <fmt/format.h>
#include <fstream>
#include <optional>
#include <ostream>

#include "htppn/config_selector.hpp"
#include "htppn/errors.hpp"
#include "htppn/model.hpp"
#include "htppn/model_io.hpp"
#include "htppn/pattern_reducer.hpp"
#include "htppn/timed_sim.hpp"

namespace htppn::cli {

namespace {

// Raised for bad input files and malformed flag values.
struct UsageError {
  std::string message;
};

// Raised after the reason has already been written.
struct Failed {
  int code;
};

std::string num(double x) {
  if (x == kInf) return "inf";
  if (x == -kInf) return "-inf";
  return fmt::format("{}", x);
}

std::string time_text(Time t) { return is_infinite(t) ? "inf" : fmt::format("{}", t); }

std::string qos_line(const QosVector& q) {
  return fmt::format("r={} c={} a={} tp={}", num(q.response_time), num(q.cost), num(q.availability),
                     num(q.throughput));
}

double parse_number(std::string_view text, std::string_view what) {
  if (text == "inf") return kInf;
  double v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw UsageError{fmt::format("malformed {} '{}'", what, text)};
  return v;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto next = text.find(sep, pos);
    if (next == std::string_view::npos) next = text.size();
    auto item = text.substr(pos, next - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) out.push_back(item);
    pos = next + 1;
  }
  return out;
}

int attribute_index(std::string_view name) {
  if (name == "r") return 0;
  if (name == "c") return 1;
  if (name == "a") return 2;
  if (name == "tp") return 3;
  return -1;
}

// "r=1,c=0.5": unnamed attributes get weight 0.
Weights parse_weights(const std::string& text) {
  std::array<double, 4> w{0, 0, 0, 0};
  for (auto item : split(text, ',')) {
    auto eq = item.find('=');
    const int k = eq == std::string_view::npos ? -1 : attribute_index(item.substr(0, eq));
    if (k < 0) throw UsageError{fmt::format("malformed weight '{}', expected r=, c=, a= or tp=", item)};
    w[static_cast<std::size_t>(k)] = parse_number(item.substr(eq + 1), "weight");
  }
  try {
    return Weights(w[0], w[1], w[2], w[3]);
  } catch (const std::invalid_argument& e) {
    throw UsageError{e.what()};
  }
}

struct Requirement {
  int attribute;
  std::string op;
  double bound;
};

// "r<=X,c<=Y,a>=Z,tp>=W"
std::vector<Requirement> parse_requirements(const std::string& text) {
  std::vector<Requirement> out;
  for (auto item : split(text, ',')) {
    std::size_t at = item.find_first_of("<>=");
    if (at == std::string_view::npos) throw UsageError{fmt::format("malformed requirement '{}'", item)};
    std::size_t end = at;
    while (end < item.size() && (item[end] == '<' || item[end] == '>' || item[end] == '=')) ++end;
    std::string_view name = item.substr(0, at);
    while (!name.empty() && name.back() == ' ') name.remove_suffix(1);
    std::string op(item.substr(at, end - at));
    std::string_view value = item.substr(end);
    while (!value.empty() && value.front() == ' ') value.remove_prefix(1);
    const int k = attribute_index(name);
    if (k < 0 || (op != "<=" && op != ">=" && op != "<" && op != ">" && op != "=="))
      throw UsageError{fmt::format("malformed requirement '{}'", item)};
    out.push_back({k, op, parse_number(value, "requirement bound")});
  }
  if (out.empty()) throw UsageError{"empty requirement list"};
  return out;
}

bool satisfied(double v, const Requirement& r) {
  if (r.op == "<=") return v <= r.bound;
  if (r.op == ">=") return v >= r.bound;
  if (r.op == "<") return v < r.bound;
  if (r.op == ">") return v > r.bound;
  return v == r.bound;
}

constexpr std::array<const char*, 4> kAttributeNames{"response time", "cost", "availability", "throughput"};
constexpr std::array<const char*, 4> kAttributeKeys{"r", "c", "a", "tp"};

CondMode parse_mode(const std::string& text) {
  if (text == "paper") return CondMode::Paper;
  if (text == "expected") return CondMode::Expected;
  throw UsageError{fmt::format("unknown mode '{}', expected paper or expected", text)};
}

class Session {
 public:
  Session(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  // Parses then validates. Parse errors are usage errors, violations domain
  // errors.
  Htppn load(const std::string& path) {
    ModelSource src;
    try {
      src = load_source(path);
    } catch (const std::runtime_error& e) {
      throw UsageError{e.what()};
    }
    ParseResult parsed = parse_model(src, ParseMode::Syntax);
    if (!parsed.ok()) {
      for (const auto& d : parsed.diagnostics) err_ << format_diagnostic(d, src.origin) << '\n';
      throw Failed{kUsageError};
    }
    const auto report = validate_structure(*parsed.model);
    if (!report.ok()) {
      for (const auto& v : report.violations)
        err_ << fmt::format("{}: {}: {}: {}\n", src.origin, rule_name(v.rule), v.id, v.message);
      throw Failed{kDomainError};
    }
    return std::move(*parsed.model);
  }

  int validate(const std::string& path) {
    ModelSource src;
    try {
      src = load_source(path);
    } catch (const std::runtime_error& e) {
      throw UsageError{e.what()};
    }
    ParseResult parsed = parse_model(src, ParseMode::Syntax);
    if (!parsed.ok()) {
      for (const auto& d : parsed.diagnostics) err_ << format_diagnostic(d, src.origin) << '\n';
      return kUsageError;
    }
    const auto report = validate_structure(*parsed.model);
    for (const auto& v : report.violations)
      out_ << fmt::format("{}\t{}\t{}\n", rule_name(v.rule), v.id, v.message);
    if (!report.ok()) {
      err_ << fmt::format("{}: {} violation(s)\n", src.origin, report.violations.size());
      return kDomainError;
    }
    out_ << "ok\n";
    return kOk;
  }

  int enumerate(const std::string& path) {
    const Htppn model = load(path);
    for (const auto& c : enumerate_configurations(model)) out_ << format_configuration(c) << '\n';
    return kOk;
  }

  int select(const std::string& path, const Weights& w, CondMode mode, bool explain, bool oracle) {
    const Htppn model = load(path);
    const SelectionResult r = select_optimal(model, w, mode);
    out_ << format_configuration(r.configuration) << '\n';
    out_ << qos_line(r.composite_qos) << '\n';
    out_ << "scalar=" << num(r.scalar) << '\n';
    if (explain) {
      for (const auto& step : r.trace) {
        std::string scalars;
        for (double s : step.branch_scalars) scalars += (scalars.empty() ? "" : ",") + num(s);
        out_ << fmt::format("step {} scalars={} chosen={}\n", step.path, scalars, step.chosen + 1);
      }
      err_ << "note: availability is composed from availabilities: a product in sequence and parallel, "
              "an alpha-weighted sum in conditionals\n";
      err_ << fmt::format("note: conditional mode is {}\n", mode == CondMode::Paper ? "paper" : "expected");
    }
    if (oracle) {
      const SelectionResult best = brute_force_optimal(model, w, mode);
      const bool agree = best.scalar == r.scalar;
      out_ << fmt::format("oracle configurations={} scalar={} {}\n", best.selections_made, num(best.scalar),
                          agree ? "agree" : "diverge");
      if (!agree) {
        out_ << "oracle " << format_configuration(best.configuration) << '\n';
        if (explain)
          err_ << fmt::format("note: stack selection is {} above the exhaustive optimum\n",
                              num(r.scalar - best.scalar));
      }
    }
    return kOk;
  }

  FlatNet configured(const Htppn& model, const std::string& config) {
    try {
      return flatten(model, parse_configuration(model, config));
    } catch (const std::invalid_argument& e) {
      throw UsageError{e.what()};
    }
  }

  int qos(const std::string& path, const std::string& config, const Weights& w, CondMode mode) {
    const Htppn model = load(path);
    const QosVector q = aggregate(reduce(configured(model, config)), mode);
    out_ << qos_line(q) << '\n';
    out_ << "scalar=" << num(scalarize(q, w)) << '\n';
    return kOk;
  }

  int schedule(const std::string& path, const std::string& config) {
    const Htppn model = load(path);
    const auto report = propagate_windows(configured(model, config));
    out_ << "transition\tenable_min\tenable_max\tteb_min\tteb_max\tcompletion_min\tcompletion_max\tschedulable\n";
    for (const auto& w : report.windows) {
      if (!w.reachable) {
        out_ << fmt::format("{}\t-\t-\t{}\t{}\t-\t-\t{}\n", w.transition, w.teb_min, time_text(w.teb_max),
                            w.schedulable ? "yes" : "no");
        continue;
      }
      out_ << fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", w.transition, w.enable_min, time_text(w.enable_max),
                          w.teb_min, time_text(w.teb_max), w.completion_min, time_text(w.completion_max),
                          w.schedulable ? "yes" : "no");
    }
    for (const auto& v : report.violations) err_ << fmt::format("{}: {}\n", v.transition, v.reason);
    out_ << "consistent=" << (report.consistent ? "true" : "false") << '\n';
    return kOk;
  }

  int simulate(const std::string& path, const std::string& config, const std::string& policy_name,
               std::uint64_t seed) {
    const Htppn model = load(path);
    Policy policy;
    if (policy_name == "earliest") policy = Policy::earliest();
    else if (policy_name == "latest") policy = Policy::latest();
    else if (policy_name == "random") policy = Policy::random(seed);
    else throw UsageError{fmt::format("unknown policy '{}'", policy_name)};
    const FlatNet net = configured(model, config);
    try {
      print_trace(simulate_run(net, policy));
    } catch (const Deadlock& d) {
      print_trace(d.trace());
      err_ << d.what() << '\n';
      return kDomainError;
    }
    return kOk;
  }

  int export_dot_file(const std::string& path, const std::string& output, const std::string& config) {
    const Htppn model = load(path);
    const std::string text = config.empty() ? export_dot(model) : export_dot(configured(model, config));
    if (output.empty()) {
      out_ << text;
      return kOk;
    }
    std::ofstream file(output, std::ios::binary);
    if (!file) throw UsageError{fmt::format("cannot write '{}'", output)};
    file << text;
    return kOk;
  }

  int check(const std::string& path, const std::string& require, const Weights& w, CondMode mode) {
    const auto requirements = parse_requirements(require);
    const Htppn model = load(path);
    const SelectionResult r = select_optimal(model, w, mode);
    const QosVector& q = r.composite_qos;
    const std::array<double, 4> values{q.response_time, q.cost, q.availability, q.throughput};
    out_ << format_configuration(r.configuration) << '\n';
    out_ << qos_line(q) << '\n';
    bool ok = true;
    for (const auto& req : requirements) {
      const auto k = static_cast<std::size_t>(req.attribute);
      if (satisfied(values[k], req)) continue;
      ok = false;
      err_ << fmt::format("{} requirement unmet: {}={} but required {}{}\n", kAttributeNames[k], kAttributeKeys[k],
                          num(values[k]), req.op, num(req.bound));
    }
    out_ << (ok ? "requirements=met" : "requirements=unmet") << '\n';
    return ok ? kOk : kDomainError;
  }

 private:
  void print_trace(const Trace& trace) {
    for (const auto& s : trace.steps)
      out_ << fmt::format("{}\t{}\t{}\n", s.fire_time, s.transition, format_marking(s.marking_after));
  }

  std::ostream& out_;
  std::ostream& err_;
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hierarchical timed Petri net models of composite services", "htppn"};
  app.require_subcommand(1);

  std::string file;
  std::string weights_text;
  std::string mode_text = "paper";
  std::string config;
  std::string policy = "earliest";
  std::uint64_t seed = 0;
  std::string output;
  std::string require;
  bool explain = false;
  bool oracle = false;

  auto add_file = [&](CLI::App* sub) { sub->add_option("file", file, "Model file (.htppn)")->required(); };
  auto add_selection = [&](CLI::App* sub) {
    sub->add_option("--weights", weights_text, "Attribute weights, e.g. r=1,c=1,a=0,tp=0");
    sub->add_option("--mode", mode_text, "Conditional mode: paper or expected");
  };

  auto* validate = app.add_subcommand("validate", "Check structural rules");
  add_file(validate);
  auto* enumerate = app.add_subcommand("enumerate", "List every configuration");
  add_file(enumerate);
  auto* select = app.add_subcommand("select", "Choose the configuration with the lowest weighted QoS");
  add_file(select);
  add_selection(select);
  select->add_flag("--explain", explain, "Print the per-refinable decisions");
  select->add_flag("--oracle", oracle, "Compare against exhaustive search");
  auto* qos = app.add_subcommand("qos", "Composite QoS of one configuration");
  add_file(qos);
  add_selection(qos);
  qos->add_option("--config", config, "Branch choices, e.g. T3=1,T4=2")->required();
  auto* schedule = app.add_subcommand("schedule", "Timing windows and schedulability of one configuration");
  add_file(schedule);
  schedule->add_option("--config", config, "Branch choices")->required();
  auto* simulate = app.add_subcommand("simulate", "Run the timed token game on one configuration");
  add_file(simulate);
  simulate->add_option("--config", config, "Branch choices")->required();
  simulate->add_option("--policy", policy, "earliest, latest or random");
  simulate->add_option("--seed", seed, "Seed for the random policy");
  auto* dot = app.add_subcommand("export-dot", "Graphviz rendering");
  add_file(dot);
  dot->add_option("-o,--output", output, "Output path (default stdout)");
  dot->add_option("--config", config, "Render the flattened net of this configuration");
  auto* check = app.add_subcommand("check", "Test the selected optimum against QoS requirements");
  add_file(check);
  add_selection(check);
  check->add_option("--require", require, "e.g. r<=20,c<=30,a>=0.9,tp>=10")->required();

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsageError;
  }

  Session session(out, err);
  try {
    const Weights weights = weights_text.empty() ? Weights() : parse_weights(weights_text);
    const CondMode mode = parse_mode(mode_text);
    if (*validate) return session.validate(file);
    if (*enumerate) return session.enumerate(file);
    if (*select) return session.select(file, weights, mode, explain, oracle);
    if (*qos) return session.qos(file, config, weights, mode);
    if (*schedule) return session.schedule(file, config);
    if (*simulate) return session.simulate(file, config, policy, seed);
    if (*dot) return session.export_dot_file(file, output, config);
    if (*check) return session.check(file, require, weights, mode);
  } catch (const UsageError& e) {
    err << "error: " << e.message << '\n';
    return kUsageError;
  } catch (const Failed& f) {
    return f.code;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kDomainError;
  }
  return kUsageError;
}

}  // namespace htppn::cli
