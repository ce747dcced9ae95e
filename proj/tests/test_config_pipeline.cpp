#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "homs/pipeline.hpp"

using namespace homs;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

bool has_error(const std::vector<std::string>& errors, const std::string& needle) {
  return std::any_of(errors.begin(), errors.end(), [&](const std::string& e) { return e.find(needle) != std::string::npos; });
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("homs_test_" + name);
  fs::remove_all(p);
  return p;
}

RunConfig small_config(const fs::path& out) {
  json j = {{"name", "small"},
            {"meshes", {{"cell_divisions", 8}, {"macro_divisions", {16, 16}}, {"fine_per_cell", 8}, {"epsilon", "1/4"}}},
            {"representative_grid", {{"n", {3, 3}}}},
            {"outputs", {{"dir", out.string()}, {"threads", 2}}}};
  return parse_config(j);
}

}  // namespace

TEST_CASE("defaults fill an empty config") {
  const ValidationResult v = validate_config(json::object());
  REQUIRE(v.errors.empty());
  const json& n = v.normalized;
  CHECK(n["meshes"]["cell_divisions"] == 20);
  CHECK(n["meshes"]["epsilon"] == 0.1);
  CHECK(n["representative_grid"]["n"] == json({21, 21}));
  CHECK(n["material"]["weight"] == "example1");
  CHECK(n["bcs"]["T"] == "273.15");
  CHECK(n["stages"].size() == 6);
  const RunConfig cfg = parse_config(json::object());
  CHECK(cfg.model.hash() == example1_model().hash());
  CHECK(cfg.sources.f[1].value({0.3, 0.3}) == 1000.0);
  CHECK(cfg.tagging.face[0] == kAllDirichlet);
  CHECK(cfg.path == "general");
}

TEST_CASE("fractions and normalization") {
  CHECK(parse_fraction("1/4") == 0.25);
  CHECK(parse_fraction(" 0.125") == 0.125);
  CHECK_THROWS(parse_fraction("1/0"));
  CHECK_THROWS(parse_fraction("a/b"));
  CHECK_THROWS(parse_fraction("0.1x"));
  const ValidationResult v = validate_config({{"meshes", {{"epsilon", "1/20"}}}, {"convergence", {{"eps", {"1/2", 0.25}}}}});
  REQUIRE(v.errors.empty());
  CHECK(v.normalized["meshes"]["epsilon"] == 0.05);
  CHECK(v.normalized["convergence"]["eps"] == json({0.5, 0.25}));
}

TEST_CASE("every problem is reported at once") {
  json bad = {{"colour", 1},
              {"material", {{"mode", "blend"}}},
              {"geometry", {{"inclusion", {{"center", {0.5, 0.5}}, {"radius", 0.7}}}}},
              {"meshes", {{"epsilon", 0.3}}},
              {"bcs", {{"faces", {{"left", {"T", "q", "c", "u"}}, {"right", {"q", "c", "u"}}, {"bottom", {"q", "c", "u"}},
                                  {"top", {"q", "c", "u"}}}}}},
              {"stages", {"cell", "bake"}},
              {"reconstruct", {{"path", "sideways"}}},
              {"outputs", {{"threads", 0}}}};
  const ValidationResult v = validate_config(bad);
  CHECK(has_error(v.errors, "unknown section 'colour'"));
  CHECK(has_error(v.errors, "mode must be"));
  CHECK(has_error(v.errors, "geometry.inclusion"));
  CHECK(has_error(v.errors, "meshes.epsilon"));
  CHECK(has_error(v.errors, "bcs.faces.left"));
  CHECK(has_error(v.errors, "unknown stage 'bake'"));
  CHECK(has_error(v.errors, "reconstruct.path"));
  CHECK(has_error(v.errors, "threads must be >= 1"));
  try {
    parse_config(bad);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.errors().size() == v.errors.size());
  }
  json no_t = {{"bcs", {{"faces", {{"left", {"q", "c", "u"}}, {"right", {"q", "c", "u"}}, {"bottom", {"q", "c", "u"}},
                                   {"top", {"q", "c", "u"}}}}}}};
  CHECK(has_error(validate_config(no_t).errors, "temperature T has no Dirichlet face (Gamma_T)"));
  CHECK(has_error(validate_config({{"sources", {{"h", "sin(x1"}}}}).errors, "sources.h"));
  CHECK(has_error(validate_config({{"material", {{"weight", "x9"}}}}).errors, "material.weight"));
  CHECK(has_error(validate_config({{"material", {{"matrix", {{"E", 1}, {"nu", 0.5}, {"k", 1}, {"g", 1}, {"alpha", 0}, {"beta", 0}}}}}}).errors,
                  "material.matrix"));
}

TEST_CASE("inclusion can be removed") {
  const RunConfig cfg = parse_config({{"geometry", {{"inclusion", nullptr}}}});
  CHECK_FALSE(cfg.model.geometry.inclusion.has_value());
}

TEST_CASE("cache bundles round-trip and reject corruption") {
  const fs::path dir = scratch("bundle");
  fs::create_directories(dir);
  MatrixBundle b;
  b["a"] = Eigen::MatrixXd::Random(5, 3);
  b["empty"] = Eigen::MatrixXd(0, 4);
  const std::string p = (dir / "x.bin").string();
  write_bundle(p, b);
  const MatrixBundle r = read_bundle(p);
  REQUIRE(r.size() == 2);
  CHECK(r.at("a") == b.at("a"));
  CHECK(r.at("empty").cols() == 4);

  std::string bytes = slurp(p);
  bytes[bytes.size() / 2] ^= 0x5a;
  std::ofstream(p, std::ios::binary) << bytes;
  CHECK_THROWS_AS(read_bundle(p), CacheError);
  std::ofstream(p, std::ios::binary) << slurp(p).substr(0, 20);
  CHECK_THROWS_AS(read_bundle(p), CacheError);
  CHECK_THROWS_AS(read_bundle((dir / "missing.bin").string()), CacheError);

  const CellCache cache(dir.string());
  CHECK_FALSE(cache.contains(42, "cells"));
  CHECK_FALSE(cache.load(42, "cells").has_value());
  cache.store(42, "cells", b);
  CHECK(cache.contains(42, "cells"));
  CHECK(cache.load(42, "cells")->at("a") == b.at("a"));
  fs::remove_all(dir);
}

TEST_CASE("offline keys separate the inputs") {
  const auto cell = build_unit_cell_mesh(8, Circle{});
  const MaterialModel m = example1_model();
  const auto g3 = build_representative_grid(Box{}, {3, 3}), g5 = build_representative_grid(Box{}, {5, 5});
  CHECK(offline_key(m, cell, g3, true) == offline_key(m, cell, g3, true));
  CHECK(offline_key(m, cell, g3, true) != offline_key(m, cell, g3, false));
  CHECK(offline_key(m, cell, g3, true) != offline_key(m, cell, g5, true));
  CHECK(offline_key(m, cell, g3, true) != offline_key(coupled_model(), cell, g3, true));
  CHECK(separated_key(m, cell) != offline_key(m, cell, g3, true));
}

TEST_CASE("offline results do not depend on the thread count") {
  auto cell = std::make_shared<const UnitCellMesh>(build_unit_cell_mesh(8, Circle{}));
  const auto grid = build_representative_grid(Box{}, {3, 2});
  const OfflineResult a = run_offline(cell, example1_model(), grid, 1, nullptr);
  const OfflineResult b = run_offline(cell, example1_model(), grid, 4, nullptr);
  for (int i = 0; i < grid.size(); ++i) {
    CHECK(a.sets.first[i].data == b.sets.first[i].data);
    CHECK(a.sets.second[i].data == b.sets.second[i].data);
    CHECK(a.homog.values[i].D == b.homog.values[i].D);
  }
}

TEST_CASE("stages, cache reuse and reproducible outputs") {
  const fs::path root = scratch("pipeline");
  RunConfig cfg = small_config(root / "a");
  cfg.cache_dir = (root / "cache").string();
  const std::set<std::string> online{"homogenize", "macro", "reconstruct", "reference", "compare"};

  SUBCASE("online stages need the cell cache") {
    CHECK_THROWS_WITH_AS(run_experiment(cfg, 0.25, online), doctest::Contains("run the 'cell' stage first"),
                         CacheError);
  }

  SUBCASE("a cell-only run leaves nothing but the cache") {
    const ExperimentOutputs out = run_experiment(cfg, 0.25, {"cell"});
    CHECK(out.offline_computed);
    write_outputs(cfg, out, {"cell"}, cfg.out_dir);
    CHECK((!fs::exists(cfg.out_dir) || fs::is_empty(cfg.out_dir)));
    CHECK_FALSE(fs::is_empty(cfg.cache_dir));
    // the online stages now run from the cache
    const ExperimentOutputs again = run_experiment(cfg, 0.25, online);
    CHECK_FALSE(again.offline_computed);
    CHECK(again.general.report.has_value());
  }

  SUBCASE("warm cache and byte-identical outputs") {
    std::set<std::string> all = online;
    all.insert("cell");
    const ExperimentOutputs first = run_experiment(cfg, 0.25, all);
    CHECK(first.offline_computed);
    write_outputs(cfg, first, all, (root / "a").string());

    RunConfig cfg2 = cfg;
    cfg2.threads = 3;
    const ExperimentOutputs second = run_experiment(cfg2, 0.25, all);
    CHECK_FALSE(second.offline_computed);
    CHECK(std::any_of(second.timings.begin(), second.timings.end(),
                      [](const StageTiming& t) { return t.stage == "cell(cached)"; }));
    write_outputs(cfg2, second, all, (root / "b").string());

    for (const char* f : {"errors.csv", "residuals.csv", "homogenized.csv", "macro.vtk", "fine.vtk"}) {
      INFO(f);
      REQUIRE(fs::exists(root / "a" / f));
      CHECK(slurp(root / "a" / f) == slurp(root / "b" / f));
    }
    CHECK(fs::exists(root / "a" / "timing.csv"));
    const json manifest = json::parse(slurp(root / "a" / "manifest.json"));
    CHECK(manifest["epsilon"] == 0.25);
    CHECK(manifest["offline_computed"] == true);
  }

  fs::remove_all(root);
}

TEST_CASE("separated path needs a product model") {
  const fs::path root = scratch("sep");
  RunConfig cfg = small_config(root);
  cfg.model = coupled_model();
  cfg.path = "separated";
  CHECK_THROWS_AS(run_experiment(cfg, 0.25, {"cell", "homogenize", "macro"}), std::invalid_argument);
  CHECK_THROWS_AS(run_experiment(cfg, 0.25, {"bake"}), std::invalid_argument);
  fs::remove_all(root);
}

TEST_CASE("convergence sweep input checks") {
  const fs::path root = scratch("conv");
  RunConfig cfg = small_config(root);
  CHECK_THROWS_AS(run_convergence(cfg, {0.25}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(run_convergence(cfg, {0.25, 0.125}, 0.1), std::invalid_argument);
  fs::remove_all(root);
}
