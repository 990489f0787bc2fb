#include "snn/signal.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace snn {

TimeSeries::TimeSeries(Mat d, double dt_) : data(std::move(d)), dt(dt_) {
    if (dt <= 0.0) throw ParameterError("TimeSeries: dt must be > 0");
}

TimeSeries TimeSeries::zeros(Eigen::Index channels, Eigen::Index steps, double dt) {
    if (dt <= 0.0) throw ParameterError("TimeSeries: dt must be > 0");
    TimeSeries ts;
    ts.data = Mat::Zero(channels, steps);
    ts.dt = dt;
    return ts;
}

void TimeSeries::to_csv(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for write: " + path);
    f << "t";
    for (Eigen::Index c = 0; c < channels(); ++c) f << ",ch" << c;
    f << "\n";
    char buf[64];
    for (Eigen::Index t = 0; t < steps(); ++t) {
        std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(t) * dt);
        f << buf;
        for (Eigen::Index c = 0; c < channels(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", data(c, t));
            f << "," << buf;
        }
        f << "\n";
    }
    if (!f) throw IoError("write failed: " + path);
}

TimeSeries TimeSeries::from_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open: " + path);
    std::string line;
    if (!std::getline(f, line)) throw IoError("empty csv: " + path);
    Eigen::Index nch = 0;
    for (char ch : line)
        if (ch == ',') ++nch;
    std::vector<std::vector<double>> rows;
    std::vector<double> times;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (static_cast<Eigen::Index>(row.size()) != nch + 1)
            throw IoError("ragged csv row in " + path);
        times.push_back(row[0]);
        row.erase(row.begin());
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw IoError("csv has no data rows: " + path);
    double dt = times.size() > 1 ? times[1] - times[0] : 1e-3;
    TimeSeries ts = TimeSeries::zeros(nch, static_cast<Eigen::Index>(rows.size()), dt);
    for (Eigen::Index t = 0; t < ts.steps(); ++t)
        for (Eigen::Index c = 0; c < nch; ++c) ts.data(c, t) = rows[t][c];
    return ts;
}

long SpikeRaster::total_spikes() const {
    return static_cast<long>(spikes.cast<long>().sum());
}

SpikeRaster SpikeRaster::zeros(Eigen::Index neurons, Eigen::Index steps) {
    SpikeRaster r;
    r.spikes.setZero(neurons, steps);
    return r;
}

double mse(const TimeSeries& a, const TimeSeries& b) {
    if (a.channels() != b.channels() || a.steps() != b.steps())
        throw DimensionError("mse: shape mismatch");
    if (a.dt != b.dt) throw DimensionError("mse: dt mismatch");
    return (a.data - b.data).array().square().mean();
}

TimeSeries exp_filter(const SpikeRaster& raster, double lambda, double dt) {
    if (lambda < 0.0) throw ParameterError("exp_filter: lambda must be >= 0");
    if (dt <= 0.0) throw ParameterError("exp_filter: dt must be > 0");
    const double decay = 1.0 - lambda * dt;
    TimeSeries r = TimeSeries::zeros(raster.neurons(), raster.steps(), dt);
    Vec state = Vec::Zero(raster.neurons());
    for (Eigen::Index t = 0; t < raster.steps(); ++t) {
        state = state * decay + raster.spikes.col(t).cast<double>();
        r.data.col(t) = state;
    }
    return r;
}

std::optional<int> classify_by_threshold(const TimeSeries& y, double theta) {
    if (y.channels() != 1) throw DimensionError("classify_by_threshold: need 1 channel");
    for (Eigen::Index t = 0; t < y.steps(); ++t) {
        const double v = y.data(0, t);
        const bool up = v > theta;
        const bool dn = v < -theta;
        if (up && dn) return v >= 0.0 ? 1 : -1;  // reachable only for theta < 0
        if (up) return 1;
        if (dn) return -1;
    }
    return std::nullopt;
}

}  // namespace snn
