#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>
#include <algorithm>

#include "gmvae/embedding.hpp"
#include "gmvae/flowgen.hpp"
#include "gmvae/model_io.hpp"

using namespace gmvae;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

class Workdir {
 public:
  Workdir() : dir_(fs::temp_directory_path() / ("gmvae_cli_" + std::to_string(::getpid()))) {
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  ~Workdir() { fs::remove_all(dir_); }
  std::string operator/(const std::string& name) const { return (dir_ / name).string(); }

  Run run(const std::string& args) const {
    const std::string out = *this / "stdout.txt", err = *this / "stderr.txt";
    const std::string cmd = std::string(GMVAE_CLI_PATH) + " " + args + " >" + out + " 2>" + err;
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
  }

  static std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
  }

 private:
  fs::path dir_;
};

double summary_score(const std::string& out) {
  const auto at = out.find("score=");
  REQUIRE(at != std::string::npos);
  return std::stod(out.substr(at + 6));
}

}  // namespace

TEST_CASE("gen-data") {
  Workdir w;
  auto r = w.run("gen-data --n 4 --grid 8 --seed 3 --out " + (w / "d.gmvf"));
  CHECK(r.code == 0);
  CHECK(r.out.find("noise_sigma") != std::string::npos);
  CHECK(fs::file_size(w / "d.gmvf") == 24 + 32 + 4 * 4 * 3 * 64);

  CHECK(w.run("gen-data --n 4 --grid 8 --seed 3 --out " + (w / "e.gmvf")).code == 0);
  CHECK(Workdir::slurp(w / "d.gmvf") == Workdir::slurp(w / "e.gmvf"));

  CHECK(w.run("gen-data --n 5 --grid 6 --noise 0 --out " + (w / "clean.gmvf")).code == 0);
  const auto ds = load_dataset(w / "clean.gmvf");
  const auto clean = clean_fields(ds);
  bool exact = ds.data.size() == clean.size();
  for (std::size_t i = 0; exact && i < clean.size(); ++i) exact = ds.data[i] == static_cast<float>(clean[i]);
  CHECK(exact);

  r = w.run("gen-data --n 4");
  CHECK(r.code == 2);
  CHECK(r.out.empty());
  CHECK_FALSE(r.err.empty());
  CHECK(w.run("gen-data --n 4 --out " + (w / "no/such/dir/x.gmvf")).code == 1);
  CHECK(w.run("--help").code == 0);
  CHECK(w.run("").code == 2);
  CHECK(w.run("frobnicate").code == 2);
}

TEST_CASE("train, embed, score, sample, condgen, plot") {
  Workdir w;
  const std::string data = w / "d.gmvf", model = w / "m.gmvm", log = w / "log.csv";
  REQUIRE(w.run("gen-data --n 40 --grid 6 --seed 1 --out " + data).code == 0);
  const std::string train = "train --data " + data +
                            " --epochs 4 --warmup 2 --clusters 3 --batch 10 --seed 2 --no-timing";
  REQUIRE(w.run(train + " --out " + model + " --log " + log).code == 0);
  const std::string log1 = Workdir::slurp(log);
  REQUIRE(w.run(train + " --out " + (w / "m2.gmvm") + " --log " + log).code == 0);
  CHECK(Workdir::slurp(log) == log1);
  CHECK(Workdir::slurp(model) == Workdir::slurp(w / "m2.gmvm"));
  CHECK(std::count(log1.begin(), log1.end(), '\n') == 5);

  const std::string emb = w / "e.csv";
  REQUIRE(w.run("embed --model " + model + " --data " + data + " --out " + emb).code == 0);
  std::ifstream is(emb);
  const CsvTable csv = read_csv(is);
  CHECK(csv.rows.size() == 40);
  for (double c : csv.values("cluster")) CHECK((c >= 0 && c < 3));

  auto r = w.run("score --embeddings " + emb + " --out " + (w / "rep.csv"));
  CHECK(r.code == 0);
  const double s = summary_score(r.out);
  CHECK(s >= 0.0);
  CHECK(s <= 1.0);
  CHECK(Workdir::slurp(w / "rep.csv").rfind("mode,eigenvalue,energy\n", 0) == 0);
  r = w.run("score --embeddings " + emb + " --alpha 1.0 --out " + (w / "rep.csv"));
  CHECK(summary_score(r.out) == 1.0);
  r = w.run("score --embeddings " + emb + " --quantity z1 --null 10 --out " + (w / "rep.csv"));
  CHECK(r.code == 0);
  CHECK(r.out.find("null_p95=") != std::string::npos);
  CHECK(w.run("score --embeddings " + emb + " --k 40 --out " + (w / "rep.csv")).code == 1);
  CHECK(w.run("score --embeddings " + emb + " --quantity nope --out " + (w / "rep.csv")).code == 1);

  REQUIRE(w.run("sample --model " + model + " --n 0 --out " + (w / "s0.gmvf")).code == 0);
  CHECK(fs::file_size(w / "s0.gmvf") == 24);
  REQUIRE(w.run("sample --model " + model + " --n 3 --cluster 1 --seed 4 --out " + (w / "s1.gmvf")).code == 0);
  REQUIRE(w.run("sample --model " + model + " --n 3 --cluster 1 --seed 4 --out " + (w / "s2.gmvf")).code == 0);
  CHECK(Workdir::slurp(w / "s1.gmvf") == Workdir::slurp(w / "s2.gmvf"));
  const auto samples = load_dataset(w / "s1.gmvf");
  CHECK(samples.size() == 3);
  CHECK(std::isnan(samples.re[0]));
  r = w.run("sample --model " + model + " --cluster 3 --out " + (w / "s3.gmvf"));
  CHECK(r.code == 1);
  CHECK(r.err.find("contract") != std::string::npos);

  const std::string cmodel = w / "c.gmvm";
  REQUIRE(w.run("condgen-train --model " + model + " --data " + data + " --steps 100 --seed 3 --out " + cmodel).code == 0);
  CHECK(load_model(cmodel).cond.has_value());
  r = w.run("condgen --model " + cmodel + " --re 300 --re 900 --out " + (w / "g.gmvf"));
  CHECK(r.code == 0);
  CHECK(r.err.empty());
  const auto gen = load_dataset(w / "g.gmvf");
  CHECK(gen.re == std::vector<double>{300.0, 900.0});
  r = w.run("condgen --model " + cmodel + " --re 5000 --out " + (w / "g2.gmvf"));
  CHECK(r.code == 0);
  CHECK(r.err.find("warning") != std::string::npos);
  CHECK(w.run("condgen --model " + model + " --re 300 --out " + (w / "g3.gmvf")).code == 1);

  REQUIRE(w.run("plot --embeddings " + emb + " --color-by cluster --out " + (w / "p.svg")).code == 0);
  const std::string svg = Workdir::slurp(w / "p.svg");
  std::size_t circles = 0;
  for (auto at = svg.find("<circle"); at != std::string::npos; at = svg.find("<circle", at + 1)) ++circles;
  CHECK(circles == 40);
  REQUIRE(w.run("plot --embeddings " + emb + " --color-by cluster --out " + (w / "q.svg")).code == 0);
  CHECK(Workdir::slurp(w / "q.svg") == svg);
  CHECK(w.run("plot --embeddings " + emb + " --color-by mood --out " + (w / "p.svg")).code == 2);

  std::ofstream(w / "junk.gmvf") << "not a dataset";
  r = w.run("train --data " + (w / "junk.gmvf") + " --out " + (w / "x.gmvm"));
  CHECK(r.code == 1);
  CHECK(r.err.find("parse") != std::string::npos);

  REQUIRE(w.run("gen-data --n 5 --grid 4 --out " + (w / "small.gmvf")).code == 0);
  CHECK(w.run("embed --model " + model + " --data " + (w / "small.gmvf") + " --out " + (w / "x.csv")).code == 1);
}

TEST_CASE("single-cluster model gives a constant label column") {
  Workdir w;
  const std::string data = w / "d.gmvf", model = w / "m.gmvm", emb = w / "e.csv";
  REQUIRE(w.run("gen-data --n 20 --grid 4 --out " + data).code == 0);
  REQUIRE(w.run("train --data " + data + " --clusters 1 --epochs 2 --warmup 1 --out " + model).code == 0);
  REQUIRE(w.run("embed --model " + model + " --data " + data + " --out " + emb).code == 0);
  auto r = w.run("score --embeddings " + emb + " --quantity cluster --k 5 --out " + (w / "r.csv"));
  CHECK(r.code == 0);
  CHECK(summary_score(r.out) == 1.0);
}
