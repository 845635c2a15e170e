#include <sstream>

#include "slle/cli.hpp"
#include "slle/data_io.hpp"
#include "slle/latent_linear.hpp"
#include "support.hpp"

using namespace slle;
using namespace slle::test;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("missing required flag is a configuration error") {
  const auto r = run({"fit-slle", "--dataset", "swiss_roll", "--n", "50"});
  CHECK(r.code == 1);
  CHECK(contains(r.err, "--k"));
  CHECK(contains(r.err, "error_code=1"));
}

TEST_CASE("bad values and unknown commands are configuration errors") {
  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({"fit-lle", "--k", "5", "--dataset", "moon"}).code == 1);
  CHECK(run({"fit-lle", "--k", "5", "--n", "abc"}).code == 1);
  TempDir tmp;
  const auto missing = run({"fit-lle", "--k", "5", "--csv", (tmp / "none.csv").string(),
                            "--out", (tmp / "o").string()});
  CHECK(missing.code == 1);
  CHECK(contains(missing.err, "none.csv"));
}

TEST_CASE("help lists the defaults") {
  const auto r = run({"fit-slle", "--help"});
  CHECK(r.code == 0);
  CHECK(contains(r.out, "--max-iter"));
  CHECK(contains(r.out, "100"));
}

TEST_CASE("verify succeeds") {
  const auto r = run({"verify"});
  CHECK(r.code == 0);
  CHECK_FALSE(contains(r.out, "FAIL"));
  CHECK(contains(r.out, "PASS gradient"));
}

TEST_CASE("fit-ppca on a noiseless affine patch") {
  TempDir tmp;
  const auto r = run({"fit-ppca", "--dataset", "affine_patch", "--n", "100", "--dim", "5", "--intrinsic-dim", "2",
                      "--q", "2", "--out", tmp.path().string()});
  REQUIRE(r.code == 0);
  const auto model = model_from_json(read_file(tmp / "model.json"));
  CHECK(model.isotropic());
  CHECK(model.noise_diagonal()(0) <= 1e-10);
  CHECK(contains(read_file(tmp / "trace.csv"), "iter,objective,max_change\n0,"));
}

TEST_CASE("fit-fa, fit-lle and fit-slle write their outputs") {
  TempDir tmp;
  CHECK(run({"fit-fa", "--dataset", "gaussian_blobs", "--n", "60", "--q", "1", "--out", (tmp / "fa").string()}).code ==
        0);
  CHECK(std::filesystem::exists(tmp / "fa/model.json"));
  CHECK(run({"fit-lle", "--n", "60", "--k", "6", "--out", (tmp / "lle").string()}).code == 0);
  CHECK(load_csv((tmp / "lle/embedding.csv").string(), true).d() == 2);
  const auto slle = run({"fit-slle", "--n", "60", "--k", "6", "--max-iter", "5", "--out", (tmp / "s").string()});
  CHECK(slle.code == 0);
  CHECK(contains(slle.err, "iter="));
  CHECK(load_weights_csv((tmp / "s/weights.csv").string(), 60).size() == 60);
  CHECK(std::filesystem::exists(tmp / "s/embedding.csv"));
}

TEST_CASE("config file supplies defaults and flags override it") {
  TempDir tmp;
  write_file(tmp / "cfg.txt", "# comment\nmax_iter = 3\nk=6\nn=60\n");
  const auto a = run({"fit-slle", "--config", (tmp / "cfg.txt").string(), "--out", (tmp / "a").string()});
  REQUIRE(a.code == 0);
  CHECK(load_csv((tmp / "a/trace.csv").string(), true).n() <= 3);
  const auto b =
      run({"fit-slle", "--config", (tmp / "cfg.txt").string(), "--max-iter", "1", "--out", (tmp / "b").string()});
  REQUIRE(b.code == 0);
  CHECK(load_csv((tmp / "b/trace.csv").string(), true).n() == 1);

  write_file(tmp / "bad.txt", "no equals sign\n");
  CHECK(run({"fit-slle", "--config", (tmp / "bad.txt").string()}).code == 1);
}

TEST_CASE("identical runs produce byte-identical files") {
  TempDir tmp;
  for (const char* sub : {"a", "b"}) {
    const auto r = run({"compare", "--n", "80", "--k", "6", "--max-iter", "5", "--noise", "0.05", "--seed", "3",
                        "--out", (tmp / sub).string()});
    REQUIRE(r.code == 0);
  }
  for (const char* f : {"metrics.csv"}) CHECK(read_file(tmp / "a" / f) == read_file(tmp / "b" / f));
  CHECK_FALSE(contains(read_file(tmp / "a/metrics.csv"), "runtime"));
}
