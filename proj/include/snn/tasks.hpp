#pragma once

#include <array>
#include <utility>
#include <vector>

#include "snn/rate_rnn.hpp"
#include "snn/rng.hpp"
#include "snn/signal.hpp"

namespace snn {

// --- temporal XOR ---------------------------------------------------------
// 1 s at 1 ms; two signed bumps in the first 2/3, response bump in the last
// third; label +1 iff bump signs differ

struct XorSample {
    Sample sample;       // c: 1 channel, target: 1 channel, 1000 steps
    int label = 0;       // +1 / -1
    double w1_ms = 0.0;  // drawn bump widths, for distribution checks
    double w2_ms = 0.0;
};

XorSample gen_xor(Seed seed);

// --- audio frontend --------------------------------------------------------

struct BiquadCoeffs {
    double b0, b1, b2, a1, a2;  // y[n] = b0 x[n]+b1 x[n-1]+b2 x[n-2]-a1 y[n-1]-a2 y[n-2]
};

BiquadCoeffs design_bandpass(double f_center, double bandwidth, double fs);
BiquadCoeffs design_lowpass(double f_cut, double fs);
std::vector<double> biquad_apply(const BiquadCoeffs& c, const std::vector<double>& x);
// |H(e^{j 2 pi f / fs})|
double biquad_response(const BiquadCoeffs& c, double f, double fs);

struct FilterbankConfig {
    int channels = 16;
    double f_lo = 400.0;
    double f_hi = 2800.0;
    double envelope_cut = 300.0;  // rectified-envelope lowpass
    double out_dt = 1e-3;
};

std::vector<double> filterbank_centers(const FilterbankConfig& cfg);

// audio: 1 channel, dt = 1/fs; output: channels x (duration / out_dt)
TimeSeries apply_filterbank(const TimeSeries& audio, const FilterbankConfig& cfg = {});

// rational-ratio polyphase resampler (windowed sinc)
TimeSeries resample(const TimeSeries& audio, double fs_out);

// scales noise so that 10*log10(P_sig / P_noise) = snr_db, then adds
TimeSeries mix_snr(const TimeSeries& signal, const TimeSeries& noise, double snr_db);

// 16-bit PCM wav, first channel
TimeSeries read_wav(const std::string& path);

// --- synthetic keyword -----------------------------------------------------
// 5 s, 16 envelope channels; positives carry the dataset template (a channel
// sweep), negatives a decoy sweep over different channels

struct KeywordSample {
    Sample sample;  // c: 16 channels, target: 1 channel
    int label = 0;  // +1 keyword / -1 decoy
};

KeywordSample gen_keyword(Seed dataset_seed, std::uint64_t index);

// integral of y over steps where y > gate; true iff integral > threshold
bool integral_classify(const TimeSeries& y, double gate, double threshold);

}  // namespace snn
