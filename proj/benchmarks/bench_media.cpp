#include "vfxopt/image_io.hpp"
#include "vfxopt/media.hpp"
#include "vfxopt/npy.hpp"
#include "vfxopt/wire.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace vfxopt;

VideoFrames clip(std::size_t frames, std::size_t w, std::size_t h, std::uint8_t seed) {
  VideoFrames v;
  v.fps = 24.0;
  for (std::size_t f = 0; f < frames; ++f) {
    Image img(w, h);
    for (std::size_t i = 0; i < img.rgb.size(); ++i) {
      img.rgb[i] = static_cast<std::uint8_t>((i * 31 + f * 7 + seed) & 0xff);
    }
    v.frames.push_back(std::move(img));
  }
  return v;
}

void BM_ResizeBilinear(benchmark::State &state) {
  const auto v = clip(16, 512, 320, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(resize_bilinear(v, 256, 160));
  }
}
BENCHMARK(BM_ResizeBilinear)->Unit(benchmark::kMillisecond);

void BM_VStackThree(benchmark::State &state) {
  const std::vector<VideoFrames> videos{clip(48, 320, 192, 1), clip(16, 256, 160, 2),
                                        clip(16, 256, 160, 3)};
  for (auto _ : state) {
    benchmark::DoNotOptimize(vstack_videos(videos));
  }
}
BENCHMARK(BM_VStackThree)->Unit(benchmark::kMillisecond);

void BM_PackComposite(benchmark::State &state) {
  const std::vector<VideoFrames> videos{clip(16, 128, 64, 1), clip(16, 128, 64, 2)};
  const auto composite = vstack_videos(videos);
  for (auto _ : state) {
    benchmark::DoNotOptimize(wire::pack_composite(composite));
  }
}
BENCHMARK(BM_PackComposite)->Unit(benchmark::kMillisecond);

void BM_PngRoundTrip(benchmark::State &state) {
  const auto frame = clip(1, 256, 256, 4).frames.front();
  for (auto _ : state) {
    benchmark::DoNotOptimize(decode_png(encode_png(frame)));
  }
}
BENCHMARK(BM_PngRoundTrip)->Unit(benchmark::kMicrosecond);

void BM_NpyRoundTrip(benchmark::State &state) {
  const auto t = gaussian_noise({4, 16, 64, 64}, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(decode_npy(encode_npy(t)));
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(t.size() * 4));
}
BENCHMARK(BM_NpyRoundTrip)->Unit(benchmark::kMicrosecond);

} // namespace
