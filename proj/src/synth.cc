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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "vqid/config.h"
#include "vqid/corpus.h"
#include "vqid/error.h"
#include "vqid/parallel.h"

namespace vqid {

namespace {

constexpr double kPi = std::numbers::pi;

// Direct-form biquad, coefficients normalized so a0 = 1.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;

  double step(double x) {
    double y = b0 * x + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = x;
    y2 = y1;
    y1 = y;
    return y;
  }

  // Two-pole resonator with unity gain at DC.
  void set_resonator(double f, double bw, double fs) {
    double r = std::exp(-kPi * bw / fs);
    a1 = -2.0 * r * std::cos(2.0 * kPi * f / fs);
    a2 = r * r;
    b0 = 1.0 + a1 + a2;
    b1 = b2 = 0.0;
  }

  void set_peaking(double f, double q, double gain_db, double fs) {
    double a = std::pow(10.0, gain_db / 40.0), w = 2.0 * kPi * f / fs;
    double alpha = std::sin(w) / (2.0 * q), a0 = 1.0 + alpha / a;
    b0 = (1.0 + alpha * a) / a0;
    b1 = -2.0 * std::cos(w) / a0;
    b2 = (1.0 - alpha * a) / a0;
    a1 = -2.0 * std::cos(w) / a0;
    a2 = (1.0 - alpha / a) / a0;
  }

  void set_notch(double f, double q, double fs) {
    double w = 2.0 * kPi * f / fs, alpha = std::sin(w) / (2.0 * q), a0 = 1.0 + alpha;
    b0 = 1.0 / a0;
    b1 = -2.0 * std::cos(w) / a0;
    b2 = 1.0 / a0;
    a1 = -2.0 * std::cos(w) / a0;
    a2 = (1.0 - alpha) / a0;
  }
};

struct Vowel {
  double f1, f2, f3;
};
constexpr Vowel kVowels[] = {{730, 1090, 2440}, {270, 2290, 3010}, {300, 870, 2240},
                             {530, 1840, 2480}, {570, 840, 2410},  {660, 1720, 2410}};
constexpr double kF4 = 3300.0, kF5 = 3750.0;
constexpr double kBandwidths[5] = {80.0, 100.0, 130.0, 160.0, 200.0};

// Rosenberg glottal flow over one period, phase in [0, 1).
double glottal_flow(double phase, double open_quotient) {
  const double tp = 0.7 * open_quotient, tn = 0.3 * open_quotient;
  if (phase < tp) return 0.5 * (1.0 - std::cos(kPi * phase / tp));
  if (phase < tp + tn) return std::cos(0.5 * kPi * (phase - tp) / tn);
  return 0.0;
}

struct QualityParams {
  double f0_factor = 1.0;
  double jitter = 0.005;
  double shimmer = 0.02;
  double open_quotient = 0.0;   // 0 keeps the speaker's value
  double extra_lowpass = 0.0;   // one-pole coefficient on the source
  double harmonic_gain = 1.0;
  double aspiration = 0.02;     // noise relative to the source peak
  double declination = 1.0;     // scales the phrase F0 fall
  double peak_gain_db = 0.0;    // twang boost near 3 kHz
  double formant_shift = 1.0;   // F1 and F2 multiplier
  double bandwidth_scale = 1.0; // glottal losses widen formants
  bool nasal_block = false;
};

QualityParams quality_params(std::string_view q, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(0.85, 1.15);
  QualityParams p;
  if (q == "breathy") {
    p.open_quotient = 0.9;
    p.extra_lowpass = 0.55;
    p.harmonic_gain = 0.55;
    p.aspiration = 0.35 * u(rng);
    p.bandwidth_scale = 2.5;
  } else if (q == "fry") {
    p.f0_factor = 0.5;
    p.jitter = 0.03;
    p.shimmer = 0.2;
    p.open_quotient = 0.3;
    p.declination = 0.4;
  } else if (q == "twang") {
    p.open_quotient = 0.45;
    p.peak_gain_db = 12.0;
    p.formant_shift = 1.08;
  } else if (q == "hyponasal") {
    p.nasal_block = true;
  } else if (q != "normal") {
    throw UsageError("unknown voice quality '" + std::string(q) + "'");
  }
  return p;
}

// Per-sample control tracks shared by every quality of a speaker, so the
// qualities differ only in voicing, not in what is said.
struct Script {
  std::vector<double> f0_rel;    // multiplier on the speaker F0
  std::vector<double> decl;      // phrase declination offset, fraction
  std::vector<double> envelope;  // 0 in pauses
  std::vector<Vowel> formants;   // updated every kControlStep samples
};

constexpr std::size_t kControlStep = 32;

Script make_script(const SyntheticSpeaker &spk, std::size_t n, int fs) {
  std::mt19937_64 rng(spk.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Script s;
  s.f0_rel.assign(n, 1.0);
  s.decl.assign(n, 0.0);
  s.envelope.assign(n, 0.0);
  s.formants.assign(n / kControlStep + 1, kVowels[0]);
  std::size_t pos = static_cast<std::size_t>(0.3 * fs);
  Vowel prev = kVowels[0];
  while (pos < n) {
    const int syllables = 6 + static_cast<int>(u(rng) * 9.0);
    const double start_rel = 1.05 + 0.1 * u(rng);
    std::vector<std::pair<std::size_t, std::size_t>> sylls;
    std::size_t p = pos;
    for (int k = 0; k < syllables; ++k) {
      std::size_t len = static_cast<std::size_t>((0.15 + 0.13 * u(rng)) * fs);
      sylls.emplace_back(p, len);
      p += len + static_cast<std::size_t>(0.02 * u(rng) * fs);
    }
    const std::size_t phrase_end = std::min(p, n);
    for (std::size_t i = pos; i < phrase_end; ++i) {
      double t = static_cast<double>(i - pos) / static_cast<double>(p - pos);
      s.decl[i] = (start_rel - 1.0) - 0.2 * t;
    }
    for (const auto &[st, len] : sylls) {
      const Vowel target = kVowels[static_cast<std::size_t>(u(rng) * 6.0) % 6];
      const double accent = 1.0 + 0.06 * (u(rng) - 0.5);
      const std::size_t rise = static_cast<std::size_t>(0.03 * fs);
      const std::size_t fall = static_cast<std::size_t>(0.04 * fs);
      for (std::size_t i = st; i < std::min(st + len, n); ++i) {
        std::size_t k = i - st;
        double env = 1.0;
        if (k < rise) env = 0.5 * (1.0 - std::cos(kPi * static_cast<double>(k) / rise));
        if (len - k < fall) env = 0.5 * (1.0 - std::cos(kPi * static_cast<double>(len - k) / fall));
        s.envelope[i] = env;
        s.f0_rel[i] = accent;
        if (i % kControlStep == 0) {
          double t = std::min(1.0, static_cast<double>(k) / (0.4 * static_cast<double>(len)));
          s.formants[i / kControlStep] = {prev.f1 + t * (target.f1 - prev.f1),
                                          prev.f2 + t * (target.f2 - prev.f2),
                                          prev.f3 + t * (target.f3 - prev.f3)};
        }
      }
      prev = target;
    }
    // Hold the last formants through the pause.
    pos = phrase_end + static_cast<std::size_t>((0.25 + 0.35 * u(rng)) * fs);
    for (std::size_t i = phrase_end; i < std::min(pos, n); ++i)
      if (i % kControlStep == 0) s.formants[i / kControlStep] = prev;
  }
  return s;
}

std::uint64_t mix_seed(std::uint64_t a, std::string_view tag) {
  return fnv1a64(std::string(tag), a * 0x9E3779B97F4A7C15ull + 0x632BE59BD9B4E019ull);
}

}  // namespace

SyntheticSpeaker make_synthetic_speaker(std::uint64_t corpus_seed, int index) {
  if (index < 0) throw UsageError("speaker index must be non-negative");
  char id[16];
  std::snprintf(id, sizeof id, "spk%02d", index + 1);
  SyntheticSpeaker s;
  s.id = id;
  s.seed = mix_seed(corpus_seed, s.id);
  std::mt19937_64 rng(s.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  s.f0_hz = 150.0 + 80.0 * u(rng);
  s.formant_scale = 0.9 + 0.25 * u(rng);
  s.open_quotient = 0.5 + 0.15 * u(rng);
  s.tilt = 0.2 * u(rng);
  return s;
}

AudioClip synthesize_voice(const SyntheticSpeaker &speaker, std::string_view quality,
                           double seconds, int fs) {
  if (!(seconds > 0.0) || fs < 16000) throw UsageError("synthesis needs a positive length and a sample rate of at least 16000 Hz");
  const std::size_t n = static_cast<std::size_t>(std::floor(seconds * fs + 0.5));
  Script script = make_script(speaker, n, fs);
  std::mt19937_64 rng(mix_seed(speaker.seed, quality));
  QualityParams qp = quality_params(quality, rng);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double oq = qp.open_quotient > 0.0 ? qp.open_quotient : speaker.open_quotient;

  Biquad formant[5];
  Biquad peak, notch, murmur;
  if (qp.peak_gain_db != 0.0) peak.set_peaking(3000.0, 1.4, qp.peak_gain_db, fs);
  if (qp.nasal_block) {
    notch.set_notch(1000.0 * speaker.formant_scale, 2.5, fs);
    murmur.set_resonator(250.0, 100.0, fs);
  }

  AudioClip clip;
  clip.sample_rate_hz = fs;
  clip.source_id = speaker.id + "/" + std::string(quality);
  clip.samples.assign(n, 0.0);
  double phase = 0.0, period_f0 = speaker.f0_hz, amp = 1.0;
  double prev_flow = 0.0, lp = 0.0, tilt_lp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i % kControlStep == 0) {
      const Vowel &v = script.formants[i / kControlStep];
      const double sc = speaker.formant_scale;
      double f[5] = {v.f1 * sc * qp.formant_shift, v.f2 * sc * qp.formant_shift, v.f3 * sc,
                     kF4 * sc, kF5 * sc};
      for (int k = 0; k < 5; ++k)
        formant[k].set_resonator(std::min(f[k], 0.45 * fs), kBandwidths[k] * qp.bandwidth_scale, fs);
    }
    const double env = script.envelope[i];
    double src = 0.0;
    if (env > 0.0) {
      double flow = amp * glottal_flow(phase, oq);
      double dflow = (flow - prev_flow) * fs / (kPi * period_f0);
      prev_flow = flow;
      lp = (1.0 - qp.extra_lowpass) * dflow + qp.extra_lowpass * lp;
      double harm = qp.harmonic_gain * lp;
      double open = phase < oq ? 1.0 : 0.4;
      double asp = qp.aspiration * open * gauss(rng);
      src = env * (harm + asp);
      phase += period_f0 / fs;
      if (phase >= 1.0) {
        phase -= 1.0;
        double target = speaker.f0_hz * qp.f0_factor *
                        (1.0 + qp.declination * script.decl[i]) * script.f0_rel[i];
        period_f0 = target * (1.0 + qp.jitter * gauss(rng));
        period_f0 = std::clamp(period_f0, 0.5 * target, 1.5 * target);
        amp = std::max(0.1, 1.0 + qp.shimmer * gauss(rng));
      }
    } else {
      phase = 0.0;
      prev_flow = 0.0;
      period_f0 = speaker.f0_hz * qp.f0_factor * (1.0 + qp.declination * script.decl[i]);
    }
    tilt_lp = (1.0 - speaker.tilt) * src + speaker.tilt * tilt_lp;
    double y = tilt_lp;
    for (auto &fk : formant) y = fk.step(y);
    if (qp.peak_gain_db != 0.0) y = peak.step(y);
    if (qp.nasal_block) y = notch.step(y) + 0.8 * murmur.step(tilt_lp);
    clip.samples[i] = y;
  }

  double energy = 0.0;
  for (double v : clip.samples) energy += v * v;
  const double rms = std::sqrt(energy / static_cast<double>(n));
  const double gain = rms > 0.0 ? 0.08 / rms : 0.0;
  std::mt19937_64 floor_rng(mix_seed(speaker.seed ^ 0xF100Dull, quality));
  for (double &v : clip.samples) v = v * gain + 3e-4 * gauss(floor_rng);
  return clip;
}

RecordingManifest synthesize_corpus(const std::filesystem::path &out_dir,
                                    const SynthConfig &cfg) {
  if (cfg.speakers < 2) throw UsageError("a synthetic corpus needs at least two speakers");
  if (!(cfg.seconds_per_quality > 0.0)) throw UsageError("recording length must be positive");
  std::filesystem::create_directories(out_dir);
  RecordingManifest m;
  for (int s = 0; s < cfg.speakers; ++s) {
    SyntheticSpeaker spk = make_synthetic_speaker(cfg.seed, s);
    std::filesystem::create_directories(out_dir / spk.id);
    for (std::string_view q : kQualities) {
      Recording r;
      r.speaker = spk.id;
      r.quality = std::string(q);
      r.path = out_dir / spk.id / (r.quality + ".wav");
      r.sample_rate_hz = cfg.sample_rate_hz;
      r.duration_s = static_cast<double>(static_cast<std::size_t>(
                         std::floor(cfg.seconds_per_quality * cfg.sample_rate_hz + 0.5))) /
                     cfg.sample_rate_hz;
      m.entries.push_back(std::move(r));
    }
  }
  parallel_for(m.entries.size(), [&](std::size_t i) {
    const Recording &r = m.entries[i];
    SyntheticSpeaker spk = make_synthetic_speaker(cfg.seed, static_cast<int>(i / kQualities.size()));
    write_wav_pcm16(r.path, synthesize_voice(spk, r.quality, cfg.seconds_per_quality,
                                             cfg.sample_rate_hz));
  });
  m.save(out_dir / "recordings.tsv");
  return m;
}

}  // namespace vqid
