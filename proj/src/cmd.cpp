#include "pdn/cmd.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <exception>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "pdn/errors.hpp"
#include "pdn/reident.hpp"
#include "pdn/scenario_io.hpp"

namespace fs = std::filesystem;

namespace pdn {

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError(p.string(), "cannot read file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError(p.string(), "cannot write file");
  out << content;
  if (!out) throw ConfigError(p.string(), "write failed");
}

// Append-only: an existing file must already hold exactly `content`.
void write_new(const fs::path& p, const std::string& content) {
  if (fs::exists(p)) {
    if (read_file(p) != content) {
      throw ConfigError(p.string(), "exists with different content; refusing to overwrite");
    }
    return;
  }
  write_file(p, content);
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    out.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

std::string results_csv(const Summary& s) {
  std::string out = "metric,value\n";
  for (const auto& [k, v] : summary_rows(s)) out += k + "," + v + "\n";
  return out;
}

std::string observations_text(const ObservationLog& log) {
  std::string out;
  for (const auto& e : log) out += format_observation(e) + "\n";
  return out;
}

std::string views_text(const RunResult& run) {
  std::string out;
  for (const auto* group : {&run.views, &run.sniffed}) {
    for (const auto& v : *group) {
      for (const auto& f : v.facts) out += format_fact(v.owner, f) + "\n";
    }
  }
  return out;
}

std::string manifest_text(const Scenario& s) {
  std::string out = "tool_version: \"" + std::string(kToolVersion) + "\"\n";
  out += "seed: " + std::to_string(s.seed) + "\n";
  out += "scenario:\n";
  const std::string dump = dump_scenario(s);
  for (auto line : lines_of(dump)) out += "  " + std::string(line) + "\n";
  return out;
}

template <class F>
int guarded(std::ostream& err, F body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvariantViolation& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

Summary run_and_summarize(const Scenario& s, RunResult& run) {
  run = run_scenario(s);
  return summarize(run, s.attacks);
}

std::vector<MixNodeInfo> mix_nodes_of(const Scenario& s) {
  std::vector<MixNodeInfo> out;
  if (s.topology.kind == Topology::Kind::Conventional) return out;
  const auto dir = Directory::build(s.counts);
  for (const auto& d : dir.dpn_sites()) out.push_back({d.entity, s.common_class});
  return out;
}

}  // namespace

void write_bundle(const fs::path& dir, const RunResult& run, const Summary& summary) {
  fs::create_directories(dir);
  write_file(dir / "results.csv", results_csv(summary));
  write_file(dir / "observations.log", observations_text(run.observations));
  write_file(dir / "views.log", views_text(run));
  write_file(dir / "manifest.txt", manifest_text(run.scenario));
}

Scenario read_bundle_scenario(const fs::path& dir) {
  const auto path = dir / "manifest.txt";
  if (!fs::exists(path)) throw MissingLog(path.string(), "bundle has no manifest");
  const auto text = read_file(path);
  const auto at = text.find("\nscenario:\n");
  if (at == std::string::npos) throw ParseError(path.string(), "no scenario section");
  std::string body;
  for (auto line : lines_of(std::string_view(text).substr(at + 11))) {
    if (line.size() >= 2 && line.substr(0, 2) == "  ") line.remove_prefix(2);
    body += std::string(line) + "\n";
  }
  return parse_scenario_text(body);
}

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> out;
  for (auto tok : [&] {
         std::vector<std::string_view> parts;
         std::string_view s(csv);
         std::size_t start = 0;
         while (start <= s.size()) {
           auto pos = s.find(',', start);
           parts.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
           if (pos == std::string_view::npos) break;
           start = pos + 1;
         }
         return parts;
       }()) {
    while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
    while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
    double v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || ec != std::errc{} || ptr != tok.data() + tok.size()) {
      throw InvalidParam("values", "malformed value '" + std::string(tok) + "'");
    }
    out.push_back(v);
  }
  return out;
}

int cmd_run(const fs::path& scenario, const fs::path& out, std::ostream& err) {
  return guarded(err, [&] {
    Scenario s = parse_scenario(scenario);
    apply_env_overrides(s);
    RunResult run;
    const Summary summary = run_and_summarize(s, run);
    write_bundle(out, run, summary);
    return kExitOk;
  });
}

int cmd_sweep(const fs::path& scenario, const std::string& knob, const std::vector<double>& values,
              const fs::path& out, unsigned parallelism, std::ostream& err) {
  return guarded(err, [&] {
    if (parallelism == 0) throw InvalidParam("parallelism", "must be >= 1");
    if (values.size() < 2) throw InvalidParam("values", "a sweep needs at least 2 values");
    Scenario base = parse_scenario(scenario);
    apply_env_overrides(base);
    // Resolve every point up front so configuration errors surface before
    // any simulation starts.
    std::vector<Scenario> points;
    for (double v : values) {
      Scenario s = base;
      apply_knob(s, knob, v);
      validate(s);
      points.push_back(std::move(s));
    }
    const auto n = static_cast<std::ptrdiff_t>(points.size());
    std::vector<FrontierRow> rows(points.size());
    std::vector<std::exception_ptr> errors(points.size());
#pragma omp parallel for num_threads(parallelism) schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      try {
        RunResult run;
        rows[i].knob = values[i];
        rows[i].summary = run_and_summarize(points[i], run);
        write_bundle(out / (knob + "=" + format_time(values[i])), run, rows[i].summary);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    std::string csv = frontier_header() + "\n";
    for (const auto& row : frontier(std::move(rows))) csv += frontier_line(row) + "\n";
    write_file(out / "frontier.csv", csv);
    return kExitOk;
  });
}

namespace {

struct AttackSpec {
  std::string name;
  AttackConfig config;
  std::uint64_t seed = 0;
  bool has_seed = false;
};

AttackSpec parse_attack_spec(const fs::path& file) {
  const auto text = read_file(file);
  AttackSpec spec;
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a64(text)));
  spec.name = hex;
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ParseError(file.string(), std::string("malformed YAML: ") + e.what());
  }
  if (!root || root.IsNull()) return spec;
  if (!root.IsMap()) throw ParseError(file.string(), "expected a mapping");
  // Reuse the scenario parser for the shared attack fields.
  YAML::Node attacks(YAML::NodeType::Map);
  for (const auto& kv : root) try {
    const auto key = kv.first.as<std::string>();
    if (key == "name") {
      spec.name = kv.second.as<std::string>();
      if (spec.name.empty() || spec.name.find_first_of("/\\") != std::string::npos) {
        throw ValidationError("name", "must be a non-empty file-name fragment");
      }
    } else if (key == "seed") {
      spec.seed = kv.second.as<std::uint64_t>();
      spec.has_seed = true;
    } else if (key == "correlation_mode" || key == "collusion_sets" || key == "reident") {
      attacks[key] = kv.second;
    } else {
      throw ParseError(key, "unknown key '" + key + "'");
    }
  } catch (const YAML::Exception& e) {
    throw ParseError(file.string(), std::string("malformed value: ") + e.what());
  }
  YAML::Node doc;
  doc["attacks"] = attacks;
  YAML::Emitter em;
  em << doc;
  spec.config = parse_scenario_text(em.c_str()).attacks;
  return spec;
}

std::vector<KnowledgeView> read_views(const fs::path& file) {
  const auto text = read_file(file);
  std::vector<KnowledgeView> views;
  std::map<Owner, std::size_t> slot;
  std::size_t n = 0;
  for (auto line : lines_of(text)) {
    ++n;
    if (line.empty()) continue;
    auto parsed = parse_fact(line);
    if (!parsed) throw ParseError(file.string() + ":" + std::to_string(n), "malformed fact");
    auto [it, fresh] = slot.try_emplace(parsed->first, views.size());
    if (fresh) views.push_back(KnowledgeView{parsed->first, {}});
    views[it->second].facts.push_back(std::move(parsed->second));
  }
  return views;
}

ObservationLog read_observations(const fs::path& file) {
  const auto text = read_file(file);
  ObservationLog log;
  std::size_t n = 0;
  for (auto line : lines_of(text)) {
    ++n;
    if (line.empty()) continue;
    auto e = parse_observation(line);
    if (!e) throw ParseError(file.string() + ":" + std::to_string(n), "malformed observation");
    log.push_back(*e);
  }
  return log;
}

}  // namespace

int cmd_attack(const fs::path& bundle, const fs::path& spec_file, std::ostream& err) {
  return guarded(err, [&] {
    const auto obs_path = bundle / "observations.log";
    const auto views_path = bundle / "views.log";
    for (const auto& p : {obs_path, views_path}) {
      if (!fs::exists(p)) throw MissingLog(p.string(), "bundle lacks this log");
    }
    const AttackSpec spec = parse_attack_spec(spec_file);
    const Scenario scenario = read_bundle_scenario(bundle);
    const ObservationLog log = read_observations(obs_path);
    const auto views = read_views(views_path);
    const GroundTruth truth = derive_truth(views, log);
    const auto nodes = mix_nodes_of(scenario);

    std::string corr =
        "node,epoch,time,outbound,anon_set,entropy_bits,map_guess,true_inbound,map_correct\n";
    const TrafficAnalysis ta(log, nodes, spec.config.correlation_mode,
                             scenario.topology.intermediaries());
    for (const auto& post : ta.posteriors()) {
      for (std::size_t e = 0; e < post.epochs.size(); ++e) {
        for (const auto& pkg : post.epochs[e].packages) {
          auto it = truth.came_from.find(pkg.outbound.value);
          const std::string truth_cell =
              it == truth.came_from.end() ? "NA" : std::to_string(it->second.value);
          const std::string correct =
              it == truth.came_from.end() ? "NA" : (pkg.map_guess == it->second ? "1" : "0");
          corr += std::to_string(post.node.value) + "," + std::to_string(e) + "," +
                  format_time(pkg.departed) + "," + std::to_string(pkg.outbound.value) + "," +
                  std::to_string(pkg.candidates.size()) + "," +
                  format_time(linkage_entropy(post, pkg.outbound)) + "," +
                  std::to_string(pkg.map_guess.value) + "," + truth_cell + "," + correct + "\n";
        }
      }
    }

    std::string coll = "set,customer_home,link_exposed\n";
    for (const auto& set : spec.config.collusion_sets) {
      const auto result = collude(select_views(views, set), truth);
      for (const auto& [home, exposed] : result.link_exposed) {
        coll += set + "," + format_address(home) + "," + (exposed ? "1" : "0") + "\n";
      }
    }

    std::string reid = "p,trials,fraction\n";
    const auto& rc = spec.config.reident;
    const auto traces = purchase_traces(views, rc.time_bin);
    const Rng rng = Rng(spec.has_seed ? spec.seed : scenario.seed).split("reident");
    if (auto f = uniqueness_reident_eligible(traces, rc.p, rc.trials, rng)) {
      reid += std::to_string(rc.p) + "," + std::to_string(rc.trials) + "," + format_time(*f) + "\n";
    }

    const std::string prefix = "attack-" + spec.name + "-";
    write_new(bundle / (prefix + "correlation.csv"), corr);
    write_new(bundle / (prefix + "collusion.csv"), coll);
    write_new(bundle / (prefix + "reident.csv"), reid);
    return kExitOk;
  });
}

namespace {

void print_table(const std::string& csv, std::ostream& out) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> width;
  for (auto line : lines_of(csv)) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (start <= line.size()) {
      auto pos = line.find(',', start);
      cells.emplace_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
      if (pos == std::string_view::npos) break;
      start = pos + 1;
    }
    width.resize(std::max(width.size(), cells.size()), 0);
    for (std::size_t i = 0; i < cells.size(); ++i) width[i] = std::max(width[i], cells[i].size());
    rows.push_back(std::move(cells));
  }
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      out << (i ? "  " : "");
      if (i + 1 < r.size()) out << std::left << std::setw(static_cast<int>(width[i]));
      out << r[i];
    }
    out << "\n";
  }
}

}  // namespace

int cmd_report(const fs::path& bundle, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto results = bundle / "results.csv";
    const auto front = bundle / "frontier.csv";
    if (!fs::exists(results) && !fs::exists(front)) {
      throw MissingLog(bundle.string(), "no results.csv or frontier.csv");
    }
    if (fs::exists(results)) {
      out << "# " << results.string() << "\n";
      print_table(read_file(results), out);
    }
    if (fs::exists(front)) {
      out << "# " << front.string() << "\n";
      print_table(read_file(front), out);
    }
    return kExitOk;
  });
}

}  // namespace pdn
