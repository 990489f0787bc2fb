#include "snn/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>

namespace snn {

namespace {

constexpr int kXorSteps = 1000;
constexpr double kDt = 1e-3;
constexpr double kSmoothSigma = 0.010;
constexpr int kMargin = 40;  // 4 sigma, keeps smoothing tails inside regions
constexpr int kInEnd = 666;  // first 2/3 of the trial
constexpr int kGapMin = 20;

std::vector<double> gauss_kernel() {
    std::vector<double> k(2 * kMargin + 1);
    double sum = 0.0;
    for (int i = -kMargin; i <= kMargin; ++i) {
        double t = i * kDt / kSmoothSigma;
        k[i + kMargin] = std::exp(-0.5 * t * t);
        sum += k[i + kMargin];
    }
    for (double& v : k) v /= sum;
    return k;
}

void smooth_inplace(Vec& x) {
    static const std::vector<double> kern = gauss_kernel();
    const Eigen::Index n = x.size();
    Vec out = Vec::Zero(n);
    for (Eigen::Index t = 0; t < n; ++t) {
        double acc = 0.0;
        for (int i = -kMargin; i <= kMargin; ++i) {
            Eigen::Index s = t - i;
            if (s >= 0 && s < n) acc += kern[i + kMargin] * x(s);
        }
        out(t) = acc;
    }
    x = out;
}

}  // namespace

XorSample gen_xor(Seed seed) {
    auto eng = make_engine(seed);
    std::uniform_real_distribution<double> wdist(0.066, 0.157);
    const double w1s = wdist(eng), w2s = wdist(eng);
    const int w1 = static_cast<int>(std::lround(w1s / kDt));
    const int w2 = static_cast<int>(std::lround(w2s / kDt));
    std::uniform_int_distribution<int> sign01(0, 1);
    const double s1 = sign01(eng) ? 1.0 : -1.0;
    const double s2 = sign01(eng) ? 1.0 : -1.0;

    const int slack = (kInEnd - kMargin) - kMargin - w1 - w2 - kGapMin;
    std::uniform_int_distribution<int> g0d(0, slack);
    const int g0 = g0d(eng);
    std::uniform_int_distribution<int> g1d(0, slack - g0);
    const int g1 = kGapMin + g1d(eng);
    const int a1 = kMargin + g0;
    const int a2 = a1 + w1 + g1;

    XorSample out;
    out.w1_ms = w1s * 1e3;
    out.w2_ms = w2s * 1e3;
    out.label = (s1 != s2) ? 1 : -1;

    Vec c = Vec::Zero(kXorSteps);
    c.segment(a1, w1).setConstant(s1);
    c.segment(a2, w2).setConstant(s2);
    smooth_inplace(c);

    Vec tgt = Vec::Zero(kXorSteps);
    tgt.segment(kInEnd + kMargin, (kXorSteps - kMargin) - (kInEnd + kMargin))
        .setConstant(static_cast<double>(out.label));
    smooth_inplace(tgt);

    out.sample.c = TimeSeries::zeros(1, kXorSteps, kDt);
    out.sample.c.data.row(0) = c.transpose();
    out.sample.target = TimeSeries::zeros(1, kXorSteps, kDt);
    out.sample.target.data.row(0) = tgt.transpose();
    return out;
}

// --- audio frontend --------------------------------------------------------

BiquadCoeffs design_bandpass(double f_center, double bandwidth, double fs) {
    if (f_center <= 0 || bandwidth <= 0 || f_center + bandwidth / 2 >= fs / 2)
        throw ParameterError("design_bandpass: band must sit below Nyquist");
    const double K = 2.0 * fs;
    auto warp = [&](double f) { return K * std::tan(std::numbers::pi * f / fs); };
    const double w1 = warp(f_center - bandwidth / 2);
    const double w2 = warp(f_center + bandwidth / 2);
    const double om2 = w1 * w2;  // prewarped center squared
    const double B = w2 - w1;
    const double a0 = K * K + B * K + om2;
    BiquadCoeffs c{};
    c.b0 = B * K / a0;
    c.b1 = 0.0;
    c.b2 = -B * K / a0;
    c.a1 = 2.0 * (om2 - K * K) / a0;
    c.a2 = (K * K - B * K + om2) / a0;
    return c;
}

BiquadCoeffs design_lowpass(double f_cut, double fs) {
    if (f_cut <= 0 || f_cut >= fs / 2)
        throw ParameterError("design_lowpass: cutoff must sit below Nyquist");
    const double K = 2.0 * fs;
    const double wc = K * std::tan(std::numbers::pi * f_cut / fs);
    const double s2 = std::numbers::sqrt2;
    const double a0 = K * K + s2 * wc * K + wc * wc;
    BiquadCoeffs c{};
    c.b0 = wc * wc / a0;
    c.b1 = 2.0 * wc * wc / a0;
    c.b2 = wc * wc / a0;
    c.a1 = 2.0 * (wc * wc - K * K) / a0;
    c.a2 = (K * K - s2 * wc * K + wc * wc) / a0;
    return c;
}

std::vector<double> biquad_apply(const BiquadCoeffs& c, const std::vector<double>& x) {
    std::vector<double> y(x.size());
    double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
    for (std::size_t n = 0; n < x.size(); ++n) {
        const double yn = c.b0 * x[n] + c.b1 * x1 + c.b2 * x2 - c.a1 * y1 - c.a2 * y2;
        x2 = x1;
        x1 = x[n];
        y2 = y1;
        y1 = yn;
        y[n] = yn;
    }
    return y;
}

double biquad_response(const BiquadCoeffs& c, double f, double fs) {
    const double w = 2.0 * std::numbers::pi * f / fs;
    const std::complex<double> z = std::polar(1.0, -w);
    const std::complex<double> num = c.b0 + c.b1 * z + c.b2 * z * z;
    const std::complex<double> den = 1.0 + c.a1 * z + c.a2 * z * z;
    return std::abs(num / den);
}

std::vector<double> filterbank_centers(const FilterbankConfig& cfg) {
    std::vector<double> f(cfg.channels);
    const double step = (cfg.f_hi - cfg.f_lo) / (cfg.channels - 1);
    for (int i = 0; i < cfg.channels; ++i) f[i] = cfg.f_lo + i * step;
    return f;
}

TimeSeries apply_filterbank(const TimeSeries& audio, const FilterbankConfig& cfg) {
    if (audio.channels() != 1) throw DimensionError("apply_filterbank: mono input expected");
    const double fs = 1.0 / audio.dt;
    const int dec = static_cast<int>(std::lround(cfg.out_dt / audio.dt));
    if (std::abs(dec * audio.dt - cfg.out_dt) > 1e-12 || dec < 1)
        throw ParameterError("apply_filterbank: audio rate must divide the output rate");

    const auto centers = filterbank_centers(cfg);
    const double bw = (cfg.f_hi - cfg.f_lo) / (cfg.channels - 1);
    std::vector<double> x(audio.steps());
    for (Eigen::Index t = 0; t < audio.steps(); ++t) x[t] = audio.data(0, t);

    const Eigen::Index out_steps = audio.steps() / dec;
    TimeSeries env = TimeSeries::zeros(cfg.channels, out_steps, cfg.out_dt);
    const BiquadCoeffs lp = design_lowpass(cfg.envelope_cut, fs);
    for (int ch = 0; ch < cfg.channels; ++ch) {
        const BiquadCoeffs bp = design_bandpass(centers[ch], bw, fs);
        std::vector<double> b = biquad_apply(bp, x);
        for (double& v : b) v = std::abs(v);
        std::vector<double> e = biquad_apply(lp, b);
        for (Eigen::Index j = 0; j < out_steps; ++j) env.data(ch, j) = e[j * dec];
    }
    return env;
}

TimeSeries resample(const TimeSeries& audio, double fs_out) {
    if (audio.channels() != 1) throw DimensionError("resample: mono input expected");
    const long fin = std::lround(1.0 / audio.dt);
    const long fout = std::lround(fs_out);
    if (fin <= 0 || fout <= 0) throw ParameterError("resample: bad rates");
    if (fin == fout) return audio;
    const long g = std::gcd(fin, fout);
    const long L = fout / g, M = fin / g;
    const long span = std::max(L, M);
    const int K = 12;  // sinc half-width in input-sample units
    const long half = K * span;

    const Eigen::Index n_in = audio.steps();
    const Eigen::Index n_out = (n_in * L) / M;
    TimeSeries out = TimeSeries::zeros(1, n_out, 1.0 / fs_out);
    const double cut = std::numbers::pi / static_cast<double>(span);
    for (Eigen::Index j = 0; j < n_out; ++j) {
        const long pos = j * M;  // output sample on the L-upsampled grid
        double acc = 0.0;
        const long n0 = (pos - half + L - 1) / L;  // ceil
        const long n1 = (pos + half) / L;
        for (long n = std::max<long>(0, n0); n <= std::min<long>(n_in - 1, n1); ++n) {
            const long d = pos - n * L;
            const double t = cut * static_cast<double>(d);
            const double sinc = d == 0 ? 1.0 : std::sin(t) / t;
            const double win = 0.5 + 0.5 * std::cos(std::numbers::pi * d / double(half));
            acc += audio.data(0, n) * sinc * win;
        }
        out.data(0, j) = acc * (cut * L / std::numbers::pi);
    }
    return out;
}

TimeSeries mix_snr(const TimeSeries& signal, const TimeSeries& noise, double snr_db) {
    if (signal.channels() != noise.channels() || signal.steps() != noise.steps())
        throw DimensionError("mix_snr: shape mismatch");
    if (signal.dt != noise.dt) throw DimensionError("mix_snr: dt mismatch");
    const double ps = signal.data.array().square().mean();
    const double pn = noise.data.array().square().mean();
    if (pn <= 0.0) throw ParameterError("mix_snr: noise has zero power");
    if (ps <= 0.0) throw ParameterError("mix_snr: signal has zero power");
    const double scale = std::sqrt(ps / (pn * std::pow(10.0, snr_db / 10.0)));
    TimeSeries out = signal;
    out.data += scale * noise.data;
    return out;
}

TimeSeries read_wav(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open wav: " + path);
    auto rd_u32 = [&]() {
        unsigned char b[4];
        f.read(reinterpret_cast<char*>(b), 4);
        return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) |
               (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
    };
    auto rd_u16 = [&]() {
        unsigned char b[2];
        f.read(reinterpret_cast<char*>(b), 2);
        return std::uint16_t(b[0]) | (std::uint16_t(b[1]) << 8);
    };
    char tag[5] = {0};
    f.read(tag, 4);
    if (std::strncmp(tag, "RIFF", 4) != 0) throw IoError("not a RIFF file: " + path);
    rd_u32();
    f.read(tag, 4);
    if (std::strncmp(tag, "WAVE", 4) != 0) throw IoError("not a WAVE file: " + path);

    std::uint16_t channels = 0, bits = 0;
    std::uint32_t rate = 0;
    std::vector<double> samples;
    while (f.read(tag, 4)) {
        const std::uint32_t size = rd_u32();
        if (std::strncmp(tag, "fmt ", 4) == 0) {
            const std::uint16_t fmt = rd_u16();
            channels = rd_u16();
            rate = rd_u32();
            rd_u32();
            rd_u16();
            bits = rd_u16();
            if (fmt != 1 || bits != 16) throw IoError("wav: only 16-bit PCM supported");
            if (size > 16) f.seekg(size - 16, std::ios::cur);
        } else if (std::strncmp(tag, "data", 4) == 0) {
            const std::uint32_t frames = size / (2 * channels);
            samples.resize(frames);
            std::vector<char> raw(size);
            f.read(raw.data(), size);
            for (std::uint32_t i = 0; i < frames; ++i) {
                std::int16_t v;
                std::memcpy(&v, raw.data() + std::size_t(i) * 2 * channels, 2);
                samples[i] = v / 32768.0;
            }
            break;
        } else {
            f.seekg(size + (size & 1), std::ios::cur);
        }
    }
    if (samples.empty() || rate == 0) throw IoError("wav: no data chunk: " + path);
    TimeSeries out = TimeSeries::zeros(1, static_cast<Eigen::Index>(samples.size()), 1.0 / rate);
    for (std::size_t i = 0; i < samples.size(); ++i) out.data(0, static_cast<Eigen::Index>(i)) = samples[i];
    return out;
}

// --- synthetic keyword -----------------------------------------------------

namespace {
constexpr int kKwSteps = 5000;
constexpr int kKwChannels = 16;
constexpr int kSweepSegs = 3;
constexpr int kSegSteps = 200;  // 200 ms per visited channel
}  // namespace

KeywordSample gen_keyword(Seed dataset_seed, std::uint64_t index) {
    // template channels fixed by the dataset seed
    auto teng = make_engine(derive_seed(dataset_seed, {0x6b77ULL}));
    std::array<int, kKwChannels> perm{};
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), teng);
    // keyword visits perm[0..2], decoy visits perm[3..5]

    auto eng = make_engine(derive_seed(dataset_seed, {0x6b77736dULL, index}));
    std::uniform_int_distribution<int> lab01(0, 1);
    const int label = lab01(eng) ? 1 : -1;
    std::uniform_int_distribution<int> t0d(500, 3400 - kSweepSegs * kSegSteps);
    const int t0 = t0d(eng);
    std::uniform_real_distribution<double> gaind(0.8, 1.2);
    const double gain = gaind(eng);

    KeywordSample out;
    out.label = label;
    out.sample.c = TimeSeries::zeros(kKwChannels, kKwSteps, kDt);
    Mat& env = out.sample.c.data;

    // colored background: rectified OU, correlation time 150 ms
    std::normal_distribution<double> xi(0.0, 1.0);
    const double tau_b = 0.150, amp_b = 0.35;
    const double decay = 1.0 - kDt / tau_b;
    const double sstep = std::sqrt(2.0 * kDt / tau_b);
    for (int ch = 0; ch < kKwChannels; ++ch) {
        double b = xi(eng);
        for (int t = 0; t < kKwSteps; ++t) {
            b = b * decay + sstep * xi(eng);
            env(ch, t) = amp_b * std::abs(b);
        }
    }

    // half-sine bumps along the visited channels
    const int base = label > 0 ? 0 : kSweepSegs;
    for (int s = 0; s < kSweepSegs; ++s) {
        const int ch = perm[base + s];
        const int a = t0 + s * kSegSteps;
        for (int t = 0; t < kSegSteps; ++t)
            env(ch, a + t) += gain * std::sin(std::numbers::pi * (t + 0.5) / kSegSteps);
    }

    Vec tgt = Vec::Zero(kKwSteps);
    tgt.segment(4000 + kMargin, kKwSteps - kMargin - (4000 + kMargin))
        .setConstant(static_cast<double>(label));
    smooth_inplace(tgt);
    out.sample.target = TimeSeries::zeros(1, kKwSteps, kDt);
    out.sample.target.data.row(0) = tgt.transpose();
    return out;
}

bool integral_classify(const TimeSeries& y, double gate, double threshold) {
    if (y.channels() != 1) throw DimensionError("integral_classify: need 1 channel");
    double s = 0.0;
    for (Eigen::Index t = 0; t < y.steps(); ++t)
        if (y.data(0, t) > gate) s += y.data(0, t) * y.dt;
    return s > threshold;
}

}  // namespace snn
