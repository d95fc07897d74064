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

#include "vqid/cli.h"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "vqid/error.h"
#include "vqid/experiment.h"
#include "vqid/log.h"
#include "vqid/parallel.h"
#include "vqid/plot.h"
#include "vqid/workspace.h"

#ifndef VQID_DEFAULT_CONFIG
#define VQID_DEFAULT_CONFIG "config/default.cfg"
#endif

namespace vqid {

namespace {

struct CommonOptions {
  std::string config = VQID_DEFAULT_CONFIG;
  std::optional<std::uint64_t> seed;
  int threads = -1;
  bool force = false;
  int verbosity = 0;
};

void add_common(CLI::App *cmd, CommonOptions &o) {
  cmd->add_option("--config", o.config, "Configuration file (key = value)")->capture_default_str();
  cmd->add_option("--seed", o.seed, "Seed overriding the config value");
  cmd->add_option("--threads", o.threads, "Worker threads (default: config, then all cores)");
  cmd->add_flag("--force", o.force, "Overwrite existing outputs");
  cmd->add_flag("-v,--verbose", o.verbosity, "Print progress messages to stderr");
}

PipelineConfig load_config(const CommonOptions &o) {
  Config c = Config::load(o.config);
  if (o.seed) c.set("seed", std::to_string(*o.seed));
  PipelineConfig p =
      PipelineConfig::from_config(c, std::filesystem::path(o.config).parent_path());
  p.validate();
  int threads = o.threads >= 0 ? o.threads : static_cast<int>(c.get_int("threads", 0));
  if (threads < 0) throw UsageError("threads must be non-negative");
  set_num_threads(threads);
  const int verbosity = std::max<int>(o.verbosity, static_cast<int>(c.get_int("verbosity", 0)));
  if (verbosity > 0) {
    set_log_sink([](LogLevel level, const std::string &msg) {
      std::fprintf(stderr, "%s: %s\n", level == LogLevel::kWarning ? "warning" : "info",
                   msg.c_str());
    });
  }
  return p;
}

RecordingManifest load_manifest_input(const std::string &manifest, const std::string &corpus) {
  if (!manifest.empty() && !corpus.empty())
    throw UsageError("pass either --manifest or --corpus, not both");
  if (!manifest.empty()) return RecordingManifest::load(manifest);
  if (!corpus.empty()) return scan_corpus_directory(corpus);
  throw UsageError("one of --manifest or --corpus is required");
}

std::string escape(const std::string &s) {
  std::string out;
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch == '\n' ? ' ' : ch;
  }
  return out;
}

void write_error(std::ostream &err, const char *kind, const std::string &msg) {
  err << "error: kind=" << kind << " message=\"" << escape(msg) << "\"\n";
}

void report_audit(const AuditSummary &a, std::ostream &out) {
  out << "audit: lines=" << a.audit_lines << " violations=" << a.violations;
  for (const auto &[stage, n] : a.per_stage) out << ' ' << stage << '=' << n;
  out << '\n';
  if (a.violations > 0)
    throw DataError("leakage audit failed: " + a.violation_lines.front());
}

const std::vector<std::string> kTrainingStages = {"ubm", "tv", "lda"};

}  // namespace

int cli_main(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Voice quality identification toolkit"};
  app.require_subcommand(1, 1);
  app.footer(
      "Environment: VQID_<KEY> overrides config key <key> (key upper-cased).\n"
      "Exit codes: 0 ok, 1 usage, 2 data error, 3 numeric failure.");

  CommonOptions common;
  std::string work, out_dir, manifest, corpus, speaker;
  int speakers = 4;
  double seconds = 300.0;
  int sample_rate = 44100;
  double excerpt = 3.0;

  auto *synth = app.add_subcommand("synth-corpus", "Generate a synthetic five-quality corpus");
  synth->add_option("--out", out_dir, "Output directory")->required();
  synth->add_option("--speakers", speakers, "Number of speakers")->capture_default_str();
  synth->add_option("--seconds", seconds, "Seconds per recording")->capture_default_str();
  synth->add_option("--sample-rate", sample_rate, "Sample rate in Hz")->capture_default_str();
  add_common(synth, common);

  auto *ingest = app.add_subcommand("ingest", "Segment a corpus into train and test sets");
  ingest->add_option("--manifest", manifest, "Recording manifest (TSV)");
  ingest->add_option("--corpus", corpus, "Corpus directory laid out as <speaker>/<quality>.wav");

  auto *pipeline = app.add_subcommand("pipeline", "Run every stage and write reports");
  pipeline->add_option("--manifest", manifest, "Recording manifest (TSV)");
  pipeline->add_option("--corpus", corpus, "Corpus directory laid out as <speaker>/<quality>.wav");

  std::vector<CLI::App *> staged = {ingest, pipeline};
  auto *features = app.add_subcommand("extract-features", "Compute MFCC and baseline features");
  auto *ubm = app.add_subcommand("train-ubm", "Train the universal background model");
  auto *tv = app.add_subcommand("train-tv", "Train the total variability matrix");
  auto *ivec = app.add_subcommand("extract-ivectors", "Extract raw i-vectors for all segments");
  auto *post = app.add_subcommand("fit-postproc", "Fit LDA and apply centring and length norm");
  auto *backend = app.add_subcommand("train-backend", "Train PLDA and SVM classifiers");
  auto *evaluate = app.add_subcommand("evaluate", "Score test segments and write reports");
  auto *plot = app.add_subcommand("plot", "Export LDA scatter plots and spectrograms");
  plot->add_option("--speaker", speaker, "Speaker to plot (default: all)");
  plot->add_option("--manifest", manifest, "Manifest for spectrograms (default: ingested copy)");
  plot->add_option("--excerpt", excerpt, "Spectrogram excerpt in seconds")->capture_default_str();
  for (auto *c : {features, ubm, tv, ivec, post, backend, evaluate, plot}) staged.push_back(c);
  for (auto *c : staged) {
    c->add_option("--work", work, "Work directory holding the run's artifacts")->required();
    add_common(c, common);
  }

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
      out << app.help();
      return 0;
    } catch (const CLI::CallForAllHelp &e) {
      out << app.help("", CLI::AppFormatMode::All);
      return 0;
    } catch (const CLI::ParseError &e) {
      write_error(err, "usage", e.what());
      return 1;
    }

    if (synth->parsed()) {
      PipelineConfig cfg = load_config(common);
      SynthConfig sc;
      sc.seed = common.seed ? *common.seed : (cfg.seed != 0 ? cfg.seed : sc.seed);
      sc.speakers = speakers;
      sc.seconds_per_quality = seconds;
      sc.sample_rate_hz = sample_rate;
      if (std::filesystem::exists(std::filesystem::path(out_dir) / "recordings.tsv") &&
          !common.force)
        throw UsageError("corpus exists in " + out_dir + "; pass --force to overwrite");
      RecordingManifest m = synthesize_corpus(out_dir, sc);
      out << "wrote " << m.entries.size() << " recordings to " << out_dir << "\n";
      return 0;
    }

    PipelineConfig cfg = load_config(common);

    if (pipeline->parsed()) {
      RecordingManifest m = load_manifest_input(manifest, corpus);
      if (std::filesystem::exists(work) && !std::filesystem::is_empty(work)) {
        if (!common.force) throw UsageError("work directory " + work + " is not empty; pass --force");
        if (!std::filesystem::exists(std::filesystem::path(work) / "run.log"))
          throw UsageError("refusing to clear " + work + ": not a previous work directory");
        std::filesystem::remove_all(work);
      }
      PipelineOutputs res = run_pipeline(m, cfg, work);
      Workspace ws(work, cfg, true);
      m.save(ws.path("manifest.tsv"));
      for (const char *a : {"manifest.tsv", kSegmentsFile, kUbmFile, kTvFile, kRawIvectorFile,
                            kLdaFile, kIvectorFile, kBackendDir, kReportDir})
        ws.mark(a, "pipeline");
      out << res.results.ivector_intra.to_text() << res.results.ivector_inter.to_text();
      if (res.results.has_baseline) out << res.results.baseline_intra.to_text();
      report_audit(audit_run_log(std::filesystem::path(work) / "run.log"), out);
      return 0;
    }

    Workspace ws(work, cfg, common.force);
    auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] {
      return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    if (ingest->parsed()) {
      RecordingManifest m = load_manifest_input(manifest, corpus);
      ws.prepare_output(kSegmentsFile);
      ws.prepare_output("manifest.tsv");
      m.save(ws.path("manifest.tsv"));
      ws.mark("manifest.tsv", "ingest");
      std::vector<Segment> segs = build_segments(m, cfg);
      SegmentSet{segs}.save(ws.path(kSegmentsFile));
      ws.mark(kSegmentsFile, "ingest");
      ws.log().line("ingest config_hash=" + cfg.config_hash + " seed=" + std::to_string(cfg.seed) +
                    " segments=" + std::to_string(segs.size()));
      out << "segments: " << segs.size() << "\n";
    } else if (features->parsed()) {
      std::vector<Segment> segs = ws.load_segments();
      ws.prepare_output(kFeatureDir);
      if (cfg.run_baseline) ws.prepare_output(kBaselineFile);
      SegmentFeatures f = extract_segment_features(segs, cfg, cfg.run_baseline);
      std::filesystem::create_directories(ws.path(kFeatureDir));
      for (std::size_t i = 0; i < segs.size(); ++i)
        write_feature_cache(ws.path(kFeatureDir) / feature_file_name(i), f.mfcc[i]);
      ws.mark(kFeatureDir, "extract-features");
      if (cfg.run_baseline) {
        write_baseline_tsv(ws.path(kBaselineFile), segs, f.baseline);
        ws.mark(kBaselineFile, "extract-features");
      }
      ws.log().timing("features", elapsed());
      out << "features: " << segs.size() << " segments\n";
    } else if (ubm->parsed()) {
      std::vector<Segment> segs = ws.load_segments();
      std::vector<FeatureMatrix> feats = ws.load_features(segs);
      ws.prepare_output(kUbmFile);
      auto gmm = train_ubm_stage(segs, feats, cfg, ws.log());
      gmm->save(ws.path(kUbmFile));
      ws.mark(kUbmFile, "train-ubm");
      out << "ubm: " << gmm->components() << " components\n";
    } else if (tv->parsed()) {
      std::vector<Segment> segs = ws.load_segments();
      auto gmm = ws.load_ubm();
      std::vector<SufficientStats> stats = stats_stage(*gmm, ws.load_features(segs));
      ws.prepare_output(kTvFile);
      TotalVariabilityModel model = train_tv_stage(segs, stats, gmm, cfg, ws.log());
      model.save(ws.path(kTvFile));
      ws.mark(kTvFile, "train-tv");
      out << "tv: dim " << model.ivector_dim() << "\n";
    } else if (ivec->parsed()) {
      std::vector<Segment> segs = ws.load_segments();
      auto gmm = ws.load_ubm();
      ws.require(kTvFile);
      TotalVariabilityModel model = TotalVariabilityModel::load(ws.path(kTvFile), gmm);
      std::vector<SufficientStats> stats = stats_stage(*gmm, ws.load_features(segs));
      ws.prepare_output(kRawIvectorFile);
      write_ivectors_csv(ws.path(kRawIvectorFile), ivector_stage(model, segs, stats));
      ws.mark(kRawIvectorFile, "extract-ivectors");
      ws.log().timing("ivectors", elapsed());
      out << "ivectors: " << segs.size() << "\n";
    } else if (post->parsed()) {
      std::vector<Segment> segs = ws.load_segments();
      ws.require(kRawIvectorFile);
      std::vector<IVector> raw = read_ivectors_csv(ws.path(kRawIvectorFile));
      if (raw.size() != segs.size()) throw DataError("i-vector file does not match segments");
      ws.prepare_output(kLdaFile);
      ws.prepare_output(kIvectorFile);
      LdaTransform lda = fit_postproc_stage(segs, raw, cfg, ws.log());
      lda.save(ws.path(kLdaFile));
      ws.mark(kLdaFile, "fit-postproc");
      write_ivectors_csv(ws.path(kIvectorFile), apply_postproc(lda, raw));
      ws.mark(kIvectorFile, "fit-postproc");
      out << "lda: " << lda.input_dim() << " -> " << lda.output_dim() << "\n";
    } else if (backend->parsed()) {
      std::vector<Segment> segs = ws.load_segments();
      ws.require(kIvectorFile);
      std::vector<IVector> processed = read_ivectors_csv(ws.path(kIvectorFile));
      if (processed.size() != segs.size()) throw DataError("i-vector file does not match segments");
      std::vector<BaselineFeatureVector> base = ws.load_baseline(segs);
      ws.prepare_output(kBackendDir);
      Backends b = train_backend_stage(segs, processed, base, cfg, ws.log());
      b.save(ws.path(kBackendDir));
      ws.mark(kBackendDir, "train-backend");
      out << "backends written to " << ws.path(kBackendDir).string() << "\n";
    } else if (evaluate->parsed()) {
      for (const char *a : {kSegmentsFile, kIvectorFile, kBackendDir}) ws.require(a);
      ws.check_uniform_hash();
      std::vector<Segment> segs = ws.load_segments();
      std::vector<IVector> processed = read_ivectors_csv(ws.path(kIvectorFile));
      if (processed.size() != segs.size()) throw DataError("i-vector file does not match segments");
      std::vector<BaselineFeatureVector> base = ws.load_baseline(segs);
      Backends b = Backends::load(ws.path(kBackendDir));
      ws.prepare_output(kReportDir);
      EvaluationResults r = evaluate_stage(segs, processed, base, b, cfg);
      write_reports(r, ws.path(kReportDir));
      ws.mark(kReportDir, "evaluate");
      ws.log().timing("evaluate", elapsed());
      out << r.ivector_intra.to_text() << r.ivector_inter.to_text();
      if (r.has_baseline) out << r.baseline_intra.to_text();
      AuditSummary a = audit_run_log(ws.path("run.log"));
      for (const auto &stage : kTrainingStages)
        if (!a.per_stage.count(stage))
          throw DataError("run log has no audit lines for stage " + stage);
      report_audit(a, out);
    } else if (plot->parsed()) {
      std::vector<Segment> segs = ws.load_segments();
      ws.require(kIvectorFile);
      std::vector<IVector> processed = read_ivectors_csv(ws.path(kIvectorFile));
      if (processed.size() != segs.size()) throw DataError("i-vector file does not match segments");
      RecordingManifest m;
      if (!manifest.empty()) {
        m = RecordingManifest::load(manifest);
      } else {
        ws.require("manifest.tsv");
        m = RecordingManifest::load(ws.path("manifest.tsv"));
      }
      std::vector<std::string> spks = speaker.empty() ? m.speakers() : std::vector{speaker};
      const int seg_len = static_cast<int>(std::lround(cfg.segment.segment_s));
      for (const auto &spk : spks) {
        std::vector<IVector> pts;
        std::vector<std::string> labels;
        for (std::size_t i = 0; i < segs.size(); ++i) {
          if (segs[i].speaker != spk || segs[i].length_label() != seg_len) continue;
          pts.push_back(processed[i]);
          labels.push_back(segs[i].quality);
        }
        if (pts.empty()) throw DataError("no segments for speaker " + spk);
        export_lda_scatter(pts, labels, ws.path("plots") / ("lda_" + spk + ".tsv"),
                           ws.path("plots") / ("lda_" + spk + ".svg"));
        std::vector<Eigen::VectorXd> v;
        for (const auto &p : pts) v.push_back(p.w);
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.4f", silhouette_score(v, labels));
        out << spk << ": silhouette " << buf << "\n";
        export_spectrograms(m, spk, cfg, ws.path("plots"), excerpt);
      }
      out << "plots written to " << ws.path("plots").string() << "\n";
    }
    return 0;
  } catch (const Error &e) {
    write_error(err, error_kind_name(e.kind()), e.what());
    return e.exit_code();
  } catch (const std::filesystem::filesystem_error &e) {
    write_error(err, "data", e.what());
    return 2;
  } catch (const std::bad_alloc &) {
    write_error(err, "data", "out of memory");
    return 2;
  }
}

}  // namespace vqid
