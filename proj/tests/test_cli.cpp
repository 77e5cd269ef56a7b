#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

struct Workdir {
  fs::path path;
  Workdir() {
    path = fs::temp_directory_path() / ("latentline_cli_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~Workdir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

int run(const std::string& args, const std::string& log) {
  const std::string cmd = std::string(LATENTLINE_CLI_PATH) + " " + args + " > " + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t lines(const std::string& path) {
  std::ifstream in(path);
  std::size_t n = 0;
  for (std::string l; std::getline(in, l);) n += !l.empty();
  return n;
}

}  // namespace

TEST_CASE("cli end to end") {
  Workdir dir;
  const auto log = dir / "log.txt";
  REQUIRE(run("synth --subjects 30 --seed 2 --out " + dir / "cohort.csv" + " --complete-out " + dir / "complete.csv" +
                  " --catalog-out " + dir / "catalog.csv",
              log) == 0);
  REQUIRE(fs::exists(dir / "cohort.csv"));

  REQUIRE(run("fit --data " + dir / "cohort.csv" + " --k-init 4 --max-iter 400 --out " + dir / "model.bin", log) == 0);
  auto report = slurp(log);
  CHECK(report.find("tol=1e-06") != std::string::npos);
  CHECK(report.find("halted_on") != std::string::npos);

  REQUIRE(run("fit --data " + dir / "cohort.csv" + " --k-init 4 --max-iter 1 --out " + dir / "one.bin", log) == 0);
  CHECK(slurp(log).find("halted_on    max_iter") != std::string::npos);

  REQUIRE(run("predict --model " + dir / "model.bin" + " --data " + dir / "cohort.csv" + " --out " + dir / "pred.csv", log) == 0);
  const auto rows = lines(dir / "pred.csv") - 1;
  CHECK(rows > 0);
  CHECK(rows % 5 == 0);  // D (3 indicator columns), V, A

  REQUIRE(run("report factors --model " + dir / "model.bin", log) == 0);
  CHECK(slurp(log).find("factor activity") != std::string::npos);

  REQUIRE(run("fit --data " + dir / "complete.csv" + " --catalog " + dir / "catalog.csv" + " --k-init 4 --max-iter 50 --out " + dir / "full.bin", log) == 0);
  REQUIRE(run("impute --model " + dir / "full.bin" + " --data " + dir / "complete.csv" + " --out " + dir / "imp.csv", log) == 0);
  CHECK(slurp(log).find("imputed 0 of") != std::string::npos);
  CHECK(slurp(dir / "imp.csv").find(",imputed,") == std::string::npos);
}

TEST_CASE("cli input errors exit with 2") {
  Workdir dir;
  const auto log = dir / "log.txt";
  {
    std::ofstream bad(dir / "bad.csv");
    bad << "subject_id,month,variable,value\ns1,zero,ADAS13,1\n";
  }
  CHECK(run("fit --data " + dir / "bad.csv" + " --out " + dir / "m.bin", log) == 2);
  CHECK(run("fit --data " + dir / "missing.csv" + " --out " + dir / "m.bin", log) == 2);
  {
    std::ofstream junk(dir / "junk.bin");
    junk << "not a model";
  }
  CHECK(run("synth --subjects 10 --out " + dir / "c.csv", log) == 0);
  CHECK(run("predict --model " + dir / "junk.bin" + " --data " + dir / "c.csv", log) == 2);
  CHECK(run("bench --spec tableX --subjects 10", log) == 2);
  CHECK(run("nonsense", log) == 2);
}

TEST_CASE("cli bench") {
  Workdir dir;
  const auto log = dir / "log.txt";
  REQUIRE(run("bench --spec appendixA --synthetic default --subjects 30 --k-init 4 --max-iter 60 --folds 3 --out " +
                  dir / "rows.csv" + " --report " + dir / "report.txt",
              log) == 0);
  CHECK(lines(dir / "rows.csv") == 1 + 3 * 3 * 6);
  CHECK(slurp(dir / "report.txt").find("sshiba") != std::string::npos);
}
