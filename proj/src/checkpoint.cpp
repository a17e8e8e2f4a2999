// Model checkpoint: "OSRM", u32 version, u32 layer-width count, u32 widths,
// then per layer the weights (row-major, out x in) and biases as
// little-endian float32.

#include <fstream>

#include "binary_io.hpp"
#include "osrlab/trainer.hpp"

namespace osrlab {

namespace {
constexpr char kMagic[4] = {'O', 'S', 'R', 'M'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
  const MlpSpec spec = params.spec();
  spec.validate();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open checkpoint for writing: " + path.string());
  os.write(kMagic, 4);
  detail::put_u32(os, kVersion);
  detail::put_u32(os, static_cast<std::uint32_t>(spec.widths.size()));
  for (std::size_t w : spec.widths) detail::put_u32(os, static_cast<std::uint32_t>(w));
  for (const auto& layer : params.layers) {
    for (double w : layer.weights.values()) detail::put_f32(os, static_cast<float>(w));
    for (double b : layer.bias) detail::put_f32(os, static_cast<float>(b));
  }
  if (!os) throw Error("failed writing checkpoint: " + path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open checkpoint: " + path.string());
  char magic[4] = {};
  if (!is.read(magic, 4) || std::string_view(magic, 4) != std::string_view(kMagic, 4)) {
    throw InvalidArgument("checkpoint has bad magic: " + path.string());
  }
  const auto version = detail::get_u32(is);
  if (!version || *version != kVersion) throw InvalidArgument("unsupported checkpoint version");
  const auto count = detail::get_u32(is);
  if (!count || *count < 3 || *count > 64) throw InvalidArgument("checkpoint has invalid layer count");
  MlpSpec spec;
  for (std::uint32_t i = 0; i < *count; ++i) {
    const auto w = detail::get_u32(is);
    if (!w) throw InvalidArgument("checkpoint truncated in header");
    spec.widths.push_back(*w);
  }
  spec.validate();
  ModelParams params;
  for (std::size_t l = 0; l + 1 < spec.widths.size(); ++l) {
    DenseLayer layer{Matrix(spec.widths[l + 1], spec.widths[l]), std::vector<double>(spec.widths[l + 1])};
    for (double& w : layer.weights.values()) {
      const auto v = detail::get_f32(is);
      if (!v) throw InvalidArgument("checkpoint truncated in weights");
      w = *v;
    }
    for (double& b : layer.bias) {
      const auto v = detail::get_f32(is);
      if (!v) throw InvalidArgument("checkpoint truncated in biases");
      b = *v;
    }
    params.layers.push_back(std::move(layer));
  }
  if (is.peek() != std::char_traits<char>::eof()) throw InvalidArgument("checkpoint has trailing bytes");
  return params;
}

}  // namespace osrlab
