#include "evdet/flops.hpp"

#include "evdet/error.hpp"
#include "evdet/io_util.hpp"

namespace evdet {

std::uint64_t FlopReport::dense_total() const {
  std::uint64_t s = 0;
  for (const auto& l : layers) s += l.dense;
  return s;
}

std::uint64_t FlopReport::executed_total() const {
  std::uint64_t s = 0;
  for (const auto& l : layers) s += l.executed;
  return s;
}

std::uint64_t FlopReport::conv_dense() const {
  std::uint64_t s = 0;
  for (const auto& l : layers) s += l.kind == LayerKind::conv ? l.dense : 0;
  return s;
}

std::uint64_t FlopReport::conv_executed() const {
  std::uint64_t s = 0;
  for (const auto& l : layers) s += l.kind == LayerKind::conv ? l.executed : 0;
  return s;
}

double FlopReport::ratio() const {
  const auto d = dense_total();
  return d ? static_cast<double>(executed_total()) / static_cast<double>(d) : 0.0;
}

double FlopReport::conv_ratio() const {
  const auto d = conv_dense();
  return d ? static_cast<double>(conv_executed()) / static_cast<double>(d) : 0.0;
}

FlopReport& FlopReport::operator+=(const FlopReport& other) {
  if (layers.empty()) {
    layers = other.layers;
    return *this;
  }
  if (other.layers.empty()) return *this;
  if (other.layers.size() != layers.size()) throw Error("cannot add FLOP reports of different networks");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].kind != other.layers[i].kind) throw Error("cannot add FLOP reports of different networks");
    layers[i].dense += other.layers[i].dense;
    layers[i].executed += other.layers[i].executed;
  }
  return *this;
}

std::uint64_t flops_per_site(const LayerSpec& l, const Shape& out) {
  const auto k2 = static_cast<std::uint64_t>(l.k) * static_cast<std::uint64_t>(l.k);
  switch (l.kind) {
    case LayerKind::conv: return 2 * k2 * static_cast<std::uint64_t>(l.cin) * static_cast<std::uint64_t>(l.cout);
    case LayerKind::maxpool: return k2 * static_cast<std::uint64_t>(out.c);
    case LayerKind::relu: return static_cast<std::uint64_t>(out.c);
  }
  return 0;
}

FlopReport analytic_flops(const NetworkSpec& spec) {
  const auto shapes = spec.shapes();
  FlopReport r;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const std::uint64_t d = flops_per_site(spec.layers[i], shapes[i + 1]) * shapes[i + 1].sites();
    r.layers.push_back({spec.layers[i].kind, d, d});
  }
  return r;
}

FlopReport flop_summary(std::span<const FlopReport> reports) {
  FlopReport total;
  for (const auto& r : reports) total += r;
  return total;
}

std::string write_flop_csv(const FlopReport& report) {
  std::string out = "layer,kind,dense_flops,executed_flops,ratio\n";
  for (std::size_t i = 0; i < report.layers.size(); ++i) {
    const auto& l = report.layers[i];
    out += std::to_string(i) + ',' + std::string(layer_kind_name(l.kind)) + ',' + std::to_string(l.dense) + ',' +
           std::to_string(l.executed) + ',' + io::fixed(l.ratio(), 6) + '\n';
  }
  out += "total,all," + std::to_string(report.dense_total()) + ',' + std::to_string(report.executed_total()) + ',' +
         io::fixed(report.ratio(), 6) + '\n';
  return out;
}

}  // namespace evdet
