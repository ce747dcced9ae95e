// Config-driven runner for the offline/online multiscale pipeline.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "homs/config.hpp"
#include "homs/pipeline.hpp"

namespace fs = std::filesystem;
using namespace homs;

namespace {

std::vector<double> parse_eps_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(parse_fraction(item));
  if (out.empty()) throw std::invalid_argument("empty --eps list");
  return out;
}

std::string eps_label(double eps) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "eps_%.6g", eps);
  return buf;
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open " + path});
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError({path + ": " + e.what()});
  }
}

void print_summary(const ExperimentOutputs& out) {
  for (const auto* p : {&out.general, &out.separated}) {
    if (!p->report) continue;
    std::cout << p->report->experiment << " (eps = " << out.epsilon << ")\n";
    for (const char* f : {"T", "c", "u"}) {
      const FieldKind k = f[0] == 'T' ? FieldKind::T : f[0] == 'c' ? FieldKind::c : FieldKind::u;
      std::printf("  %s  H1: %.5f %.5f %.5f   L2: %.3e %.3e %.3e\n", f, p->report->get(k, Norm::H1semi, 0),
                  p->report->get(k, Norm::H1semi, 1), p->report->get(k, Norm::H1semi, 2),
                  p->report->get(k, Norm::L2, 0), p->report->get(k, Norm::L2, 1), p->report->get(k, Norm::L2, 2));
    }
  }
  for (const auto& t : out.timings)
    std::printf("  %-24s nodes %7d  elements %7d  %8.3f s\n", t.stage.c_str(), t.nodes, t.elements, t.seconds);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Higher-order multiscale solver for quasi-periodic thermo-hygro-mechanical problems"};
  app.require_subcommand(1);
  std::string config_path, out_dir, eps_text, stages_text;
  int threads = 0;
  app.add_option("--config", config_path, "run configuration (JSON)")->required();
  app.add_option("--out", out_dir, "output directory (overrides outputs.dir)");
  app.add_option("--eps", eps_text, "comma-separated eps values, fractions allowed (e.g. 1/4,1/8)");
  app.add_option("--threads", threads, "worker threads for the cell stage")->check(CLI::PositiveNumber);

  auto* run = app.add_subcommand("run", "execute the stages listed in the config (or --stages)");
  run->add_option("--stages", stages_text, "comma-separated stage list");
  auto* validate = app.add_subcommand("validate", "print the normalized config or the list of errors");
  std::vector<CLI::App*> stage_cmds;
  for (const auto& s : known_stages()) stage_cmds.push_back(app.add_subcommand(s, "run stage '" + s + "'"));
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) {
      const ValidationResult v = validate_config(read_json(config_path));
      if (!v.errors.empty()) {
        for (const auto& e : v.errors) std::cerr << "error: " << e << '\n';
        return 1;
      }
      std::cout << v.normalized.dump(2) << '\n';
      return 0;
    }

    RunConfig cfg = parse_config(read_json(config_path));
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (threads > 0) cfg.threads = threads;

    std::set<std::string> stages;
    if (run->parsed()) {
      if (stages_text.empty()) {
        stages.insert(cfg.stages.begin(), cfg.stages.end());
      } else {
        std::stringstream ss(stages_text);
        for (std::string s; std::getline(ss, s, ',');)
          if (!s.empty()) stages.insert(s);
      }
    }
    for (auto* sub : stage_cmds)
      if (sub->parsed()) stages.insert(sub->get_name());

    std::vector<double> eps_list{cfg.epsilon};
    if (!eps_text.empty()) eps_list = parse_eps_list(eps_text);

    if (stages.erase("convergence")) {
      const auto& sweep = eps_text.empty() ? cfg.convergence_eps : eps_list;
      const ConvergenceResult r = run_convergence(cfg, sweep, cfg.convergence_fine_spacing);
      fs::create_directories(cfg.out_dir);
      write_convergence_csv((fs::path(cfg.out_dir) / "convergence.csv").string(), r);
      std::printf("%-10s %10s %10s %10s\n", "eps", "TerrorH10", "TerrorH11", "TerrorH12");
      for (const auto& row : r.rows)
        std::printf("%-10.5g %10.5f %10.5f %10.5f\n", row.epsilon, row.report.get(FieldKind::T, Norm::H1semi, 0),
                    row.report.get(FieldKind::T, Norm::H1semi, 1), row.report.get(FieldKind::T, Norm::H1semi, 2));
      for (const auto& [k, v] : r.rates) std::printf("rate %-16s %.3f\n", k.c_str(), v);
      if (stages.empty()) return 0;
    }

    for (double eps : eps_list) {
      const std::string dir =
          eps_list.size() == 1 ? cfg.out_dir : (fs::path(cfg.out_dir) / eps_label(eps)).string();
      const ExperimentOutputs out = run_experiment(cfg, eps, stages);
      write_outputs(cfg, out, stages, dir);
      print_summary(out);
      if (out.offline || out.separated_offline)
        std::cout << (out.offline_computed ? "cell sets computed and cached in " : "cell sets read from ")
                  << cache_root(cfg) << '\n';
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return 1;
  } catch (const CacheError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
