#include "cdec/experiment.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>

using namespace cdec;
namespace fs = std::filesystem;

namespace {

const std::string kSmall =
    " --set synthetic.num_relations=12 --set synthetic.per_relation=20 --set num_tasks=3"
    " --set epochs_stage1=2 --set epochs_stage2=2 --set pairs=0-1 --seeds 1,2";

struct Result {
  int code;
  std::string out;
  std::string err;
};

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cdec_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Result cli(const std::string& args, const std::string& tag) {
  const fs::path dir = scratch("io_" + tag);
  const std::string cmd = std::string(CDEC_CLI_PATH) + " " + args + " >" + (dir / "out").string() +
                          " 2>" + (dir / "err").string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(dir / "out"), slurp(dir / "err")};
}

std::vector<std::string> data_lines(const std::string& csv) {
  std::vector<std::string> out;
  std::istringstream in(csv);
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    out.push_back(line);
  }
  return out;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config file parsing") {
  std::istringstream in(
      "# comment\n"
      "epochs_stage1 = 3\n"
      "  lr_prev=2e-5  \n"
      "\n"
      "pairs = 0-1, 4-9\n"
      "use_empirical_init = false\n"
      "seeds = 5,6\n");
  const ExperimentConfig cfg = parse_config(in);
  CHECK(cfg.train.epochs_stage1 == 3);
  CHECK(cfg.train.lr_prev == 2e-5);
  CHECK(cfg.analogous_pairs == std::vector<RelationPair>{{0, 1}, {4, 9}});
  CHECK_FALSE(cfg.train.use_empirical_init);
  CHECK(cfg.seeds == std::vector<Seed>{5, 6});

  std::ostringstream written;
  write_config(cfg, written);
  std::istringstream back(written.str());
  CHECK(parse_config(back).resolved() == cfg.resolved());
}

TEST_CASE("config errors") {
  auto fails = [](const std::string& text) {
    std::istringstream in(text);
    try {
      parse_config(in).validate();
    } catch (const ConfigError&) {
      return true;
    }
    return false;
  };
  CHECK(fails("no_such_key = 1\n"));
  CHECK(fails("epochs_stage1 = many\n"));
  CHECK(fails("lr_cur = -1\n"));
  CHECK(fails("just words\n"));
  CHECK(fails("sweep_values = 0, -1e-5\n"));
  CHECK(fails("dataset = /definitely/missing.csv\n"));
  CHECK(fails("exemplar_rule = median\n"));
  CHECK(fails("num_tasks = 50\n"));
  CHECK_FALSE(fails("exemplar_rule = random\n"));
}

TEST_CASE("default run prints ten task columns and writes its files") {
  const fs::path out = scratch("default_run");
  const Result r = cli("run --out " + out.string(), "default_run");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("T10") != std::string::npos);
  CHECK(r.out.find("T11") == std::string::npos);
  CHECK(data_lines(slurp(out / "accuracy.csv")).size() == 5 * 10);
  const std::string summary = slurp(out / "summary.json");
  CHECK(summary.find("\"cdec-summary/1\"") != std::string::npos);
  CHECK(summary.find("\"lr_prev\"") != std::string::npos);
}

TEST_CASE("reruns are byte-identical") {
  const fs::path a = scratch("rerun_a"), b = scratch("rerun_b");
  REQUIRE(cli("run --out " + a.string() + kSmall, "rerun_a").code == 0);
  REQUIRE(cli("run --out " + b.string() + kSmall + " --set threads=1", "rerun_b").code == 0);
  CHECK(slurp(a / "accuracy.csv") == slurp(b / "accuracy.csv"));
  CHECK(slurp(a / "accuracy.csv").rfind("# cdec accuracy v1\n", 0) == 0);
}

TEST_CASE("missing dataset exits 2 naming the path") {
  const Result r = cli("run --set dataset=/no/such/embeddings.csv", "missing");
  CHECK(r.code == 2);
  CHECK(r.err.find("/no/such/embeddings.csv") != std::string::npos);
}

TEST_CASE("usage and config errors exit 2") {
  CHECK(cli("", "noverb").code == 2);
  CHECK(cli("frobnicate", "badverb").code == 2);
  CHECK(cli("run --set bogus=1", "badkey").code == 2);
  CHECK(cli("run --config /no/such/config.conf", "noconfig").code == 2);
  CHECK(cli("sweep --set sweep_values=-1", "negsweep").code == 2);
}

TEST_CASE("config file drives the run") {
  const fs::path dir = scratch("config_file");
  {
    std::ofstream cfg(dir / "exp.conf");
    cfg << "synthetic.num_relations = 12\nsynthetic.per_relation = 20\nnum_tasks = 3\n"
           "epochs_stage1 = 1\nepochs_stage2 = 1\npairs = 0-1\nseeds = 3\ndump_memory = true\n"
           "save_checkpoints = true\n";
  }
  const Result r =
      cli("run --config " + (dir / "exp.conf").string() + " --out " + (dir / "out").string(), "cfg");
  REQUIRE(r.code == 0);
  CHECK(data_lines(slurp(dir / "out" / "accuracy.csv")).size() == 3);
  CHECK(data_lines(slurp(dir / "out" / "memory_seed3.csv")).size() == 120);
  CHECK(fs::file_size(dir / "out" / "model_seed3.ckpt") > 0);
}

TEST_CASE("ablation writes four variants") {
  const fs::path out = scratch("ablation");
  REQUIRE(cli("ablation --out " + out.string() + kSmall, "ablation").code == 0);
  const auto rows = data_lines(slurp(out / "ablation.csv"));
  std::set<std::string> variants;
  std::size_t per_seed = 0;
  for (const auto& row : rows) {
    const std::string name = row.substr(0, row.find(','));
    const std::string second = row.substr(row.find(',') + 1);
    if (second.rfind("mean", 0) == 0 || second.rfind("stddev", 0) == 0) continue;
    variants.insert(name);
    ++per_seed;
  }
  CHECK(variants == std::set<std::string>{"full", "wo_empirical_init", "wo_adversarial_tuning", "wo_both"});
  CHECK(per_seed == 8);
}

TEST_CASE("sweep writes one row per value and checks the freeze") {
  const fs::path out = scratch("sweep");
  const Result r = cli("sweep --out " + out.string() + kSmall, "sweep");
  REQUIRE(r.code == 0);
  const auto rows = data_lines(slurp(out / "sweep.csv"));
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].rfind("0,", 0) == 0);
  CHECK(std::stod(rows[3].substr(0, rows[3].find(','))) == 1e-4);
  CHECK(r.out.find("freeze check") != std::string::npos);
}

TEST_CASE("a one-value sweep matches a run at that rate") {
  const fs::path s = scratch("sweep_one"), run = scratch("run_one");
  REQUIRE(cli("sweep --out " + s.string() + kSmall + " --set sweep_values=3e-5", "sweep_one").code == 0);
  REQUIRE(cli("run --out " + run.string() + kSmall + " --set lr_prev=3e-5", "run_one").code == 0);

  std::istringstream sweep_json(slurp(s / "summary.json"));
  std::istringstream run_json(slurp(run / "summary.json"));
  const auto sweep_rows = data_lines(slurp(s / "sweep.csv"));
  REQUIRE(sweep_rows.size() == 1);
  std::vector<double> finals;
  for (const auto& row : data_lines(slurp(run / "accuracy.csv"))) {
    std::vector<std::string> cells;
    std::istringstream line(row);
    std::string cell;
    while (std::getline(line, cell, ',')) cells.push_back(cell);
    if (cells[1] == "3") finals.push_back(std::stod(cells[2]));
  }
  REQUIRE(finals.size() == 2);
  const std::string mean_cell = sweep_rows[0].substr(sweep_rows[0].find(',') + 1);
  CHECK(std::stod(mean_cell) == doctest::Approx((finals[0] + finals[1]) / 2).epsilon(1e-12));
}

}  // TEST_SUITE

TEST_SUITE("cli") {

TEST_CASE("the shipped config equals the built-in defaults") {
  const ExperimentConfig shipped = load_config(fs::path(CDEC_SOURCE_DIR) / "configs" / "default.conf");
  CHECK(shipped.resolved() == ExperimentConfig{}.resolved());
}

}  // TEST_SUITE
