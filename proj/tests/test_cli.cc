// Copyright 2026 The vqid Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "test_util.h"
#include "vqid/cli.h"
#include "vqid/corpus.h"

using namespace vqid;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "vqid");
  std::vector<const char *> argv;
  for (const auto &a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string read_file(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::filesystem::path small_config(const std::filesystem::path &dir, const std::string &extra = "") {
  auto p = dir / "small.cfg";
  std::ofstream f(p);
  f << "include " << VQID_DEFAULT_CONFIG << "\n"
    << "trim_s = 1\nsegment_s = 2\nn_train = 4\ntest_lengths = 2, 1\n"
    << "ubm_components = 8\nubm_em_iters = 4\nivector_dim = 10\ntv_em_iters = 2\n"
    << "tv_init_scale = 0.1\nlda_dim = 4\nplda_em_iters = 4\nbaseline = false\nseed = 5\n"
    << extra;
  return p;
}

}  // namespace

TEST_CASE("help lists every subcommand and flag") {
  Result r = run({"--help"});
  CHECK(r.code == 0);
  for (const char *cmd : {"synth-corpus", "ingest", "extract-features", "train-ubm", "train-tv",
                          "extract-ivectors", "fit-postproc", "train-backend", "evaluate", "plot",
                          "pipeline"})
    CHECK(r.out.find(cmd) != std::string::npos);
  CHECK(r.out.find("VQID_") != std::string::npos);
  Result sub = run({"pipeline", "--help"});
  CHECK(sub.code == 0);
  for (const char *flag : {"--config", "--seed", "--threads", "--force", "--work", "--manifest", "--corpus"})
    CHECK(sub.out.find(flag) != std::string::npos);
}

TEST_CASE("usage errors are one machine-readable line") {
  Result r = run({"pipeline", "--bogus"});
  CHECK(r.code == 1);
  CHECK(r.err.rfind("error: kind=usage message=\"", 0) == 0);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  CHECK(run({"no-such-command"}).code == 1);
  CHECK(run({}).code == 1);
}

TEST_CASE("synth-corpus writes one recording per speaker and quality") {
  auto dir = test::temp_dir("cli_synth");
  Result r = run({"synth-corpus", "--speakers", "3", "--seed", "1", "--seconds", "1", "--sample-rate",
                  "16000", "--out", (dir / "c").string()});
  CHECK(r.code == 0);
  CHECK(RecordingManifest::load(dir / "c" / "recordings.tsv").entries.size() == 15);
  Result again = run({"synth-corpus", "--speakers", "3", "--seconds", "1", "--out", (dir / "c").string()});
  CHECK(again.code == 1);
}

TEST_CASE("evaluate without a trained backend names the missing artifact") {
  auto dir = test::temp_dir("cli_missing");
  Result r = run({"evaluate", "--config", small_config(dir).string(), "--work", (dir / "w").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("segments.tsv") != std::string::npos);
  CHECK(r.err.find("ingest") != std::string::npos);
}

TEST_CASE("staged commands match the one-shot pipeline") {
  auto dir = test::temp_dir("cli_stages");
  auto cfg = small_config(dir).string();
  REQUIRE(run({"synth-corpus", "--speakers", "2", "--seconds", "14", "--sample-rate", "16000", "--out",
               (dir / "c").string()})
              .code == 0);
  const std::string manifest = (dir / "c" / "recordings.tsv").string();
  const std::string work = (dir / "w").string();
  for (const char *cmd : {"extract-features", "train-ubm", "train-tv", "extract-ivectors",
                          "fit-postproc", "train-backend", "evaluate"}) {
    if (std::string(cmd) == "extract-features") {
      Result ing = run({"ingest", "--config", cfg, "--manifest", manifest, "--work", work});
      REQUIRE(ing.code == 0);
    }
    Result r = run({cmd, "--config", cfg, "--work", work, "--threads", "1"});
    INFO(cmd << ": " << r.err);
    REQUIRE(r.code == 0);
  }
  Result p = run({"pipeline", "--config", cfg, "--manifest", manifest, "--work", (dir / "p").string()});
  REQUIRE(p.code == 0);
  CHECK(p.out.find("violations=0") != std::string::npos);
  CHECK(read_file(dir / "w" / "reports" / "report_ivector_intra.tsv") ==
        read_file(dir / "p" / "reports" / "report_ivector_intra.tsv"));
  CHECK(std::filesystem::exists(dir / "w" / "ubm.vqgm.meta"));

  // Existing outputs need --force; a different config is refused.
  CHECK(run({"train-ubm", "--config", cfg, "--work", work}).code == 1);
  CHECK(run({"pipeline", "--config", cfg, "--manifest", manifest, "--work", (dir / "p").string()}).code == 1);
  auto other = small_config(dir / "w", "lda_dim = 3\n").string();
  Result mixed = run({"train-backend", "--config", other, "--work", work, "--force"});
  CHECK(mixed.code == 1);
  CHECK(mixed.err.find("config hash") != std::string::npos);

  Result plot = run({"plot", "--config", cfg, "--work", work, "--excerpt", "2"});
  INFO(plot.err);
  CHECK(plot.code == 0);
  CHECK(std::filesystem::exists(dir / "w" / "plots" / "lda_spk01.svg"));
  CHECK(std::filesystem::exists(dir / "w" / "plots" / "spectrogram_spk01_fry.pgm"));
}

TEST_CASE("evaluate refuses mixed-hash inputs") {
  auto dir = test::temp_dir("cli_mixed");
  auto cfg = small_config(dir).string();
  REQUIRE(run({"synth-corpus", "--speakers", "2", "--seconds", "14", "--sample-rate", "16000", "--out",
               (dir / "c").string()})
              .code == 0);
  const std::string work = (dir / "w").string();
  REQUIRE(run({"pipeline", "--config", cfg, "--manifest", (dir / "c" / "recordings.tsv").string(),
               "--work", work})
              .code == 0);
  {
    std::ofstream meta(dir / "w" / "lda.vqld.meta");
    meta << "config_hash=0000000000000000\nseed=5\nstage=fit-postproc\n";
  }
  Result r = run({"evaluate", "--config", cfg, "--work", work, "--force"});
  CHECK(r.code == 1);
  CHECK(r.err.find("mixed config hashes") != std::string::npos);
}
