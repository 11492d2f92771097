// Parallel kernels vs their single-threaded reference twins.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>

#include "regionsel/convolve.hpp"
#include "regionsel/network.hpp"
#include "regionsel/parallel.hpp"

using namespace regionsel;

namespace {

double best_of(int reps, const std::function<void()>& fn) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

double checksum(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

int main() {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::printf("workers %d\n", jobs());

  Image img(512, 512);
  for (double& v : img.pixels()) v = unit(rng);
  for (int side : {9, 15, 31}) {
    std::vector<double> w(static_cast<std::size_t>(side) * side);
    for (double& v : w) v = unit(rng);
    const Kernel k = Kernel::normalized(side, side, w);
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    const double par = best_of(3, [&] { a = checksum(convolve_direct(img, k, BoundaryMode::ReplicatePad).pixels()); });
    const double ref =
        best_of(3, [&] { b = checksum(reference::convolve_direct(img, k, BoundaryMode::ReplicatePad).pixels()); });
    const double fft = best_of(3, [&] { c = checksum(convolve_fft(img, k, BoundaryMode::ReplicatePad).pixels()); });
    std::printf("convolve 512x512 k%-2d  parallel %8.2f ms  reference %8.2f ms  fft %8.2f ms  speedup %.2fx  |diff| %.1e\n",
                side, par, ref, fft, ref / par, std::abs(a - b) + std::abs(a - c));
  }

  std::uint64_t state = 7;
  for (auto [in, out, side] : {std::tuple{1, 16, 228}, std::tuple{16, 32, 57}, std::tuple{32, 64, 29}}) {
    const ConvLayer layer = make_conv(in, out, 3, 2, state);
    Tensor x(in, side, side);
    for (double& v : x.data) v = unit(rng) - 0.5;
    double a = 0.0;
    double b = 0.0;
    const double par = best_of(3, [&] { a = checksum(conv2d_forward(layer, x).data); });
    const double ref = best_of(3, [&] { b = checksum(reference::conv2d_forward(layer, x).data); });
    std::printf("conv layer %2d->%2d %3dx%-3d  parallel %8.2f ms  reference %8.2f ms  speedup %.2fx  |diff| %.1e\n", in,
                out, side, side, par, ref, ref / par, std::abs(a - b));
  }
}
