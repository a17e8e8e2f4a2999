#include <fstream>
#include <sstream>

#include "binary_io.hpp"
#include "osrlab/expcli.hpp"

namespace osrlab {

namespace {

constexpr char kMagic[4] = {'O', 'S', 'R', 'F'};

using Kind = FeatureDumpError::Kind;

}  // namespace

void FeatureDump::validate() const {
  if (features.size() != labels.size() * static_cast<std::size_t>(width)) {
    throw InvalidArgument("feature dump payload has " + std::to_string(features.size()) + " values, expected " +
                          std::to_string(labels.size() * width));
  }
  if (static_cast<std::uint8_t>(role) > 3) throw InvalidArgument("feature dump role must be one of the four split roles");
}

std::string encode_features(const FeatureDump& dump) {
  dump.validate();
  std::ostringstream os(std::ios::binary);
  os.write(kMagic, 4);
  detail::put_u32(os, dump.version);
  detail::put_u32(os, static_cast<std::uint32_t>(dump.rows()));
  detail::put_u32(os, dump.width);
  os.put(static_cast<char>(dump.role));
  for (std::size_t r = 0; r < dump.rows(); ++r) {
    detail::put_i32(os, dump.labels[r]);
    for (std::size_t j = 0; j < dump.width; ++j) detail::put_f32(os, dump.features[r * dump.width + j]);
  }
  return std::move(os).str();
}

FeatureDump decode_features(const std::string& bytes) {
  std::istringstream is(bytes, std::ios::binary);
  char magic[4] = {};
  if (!is.read(magic, 4) || std::string_view(magic, 4) != std::string_view(kMagic, 4)) {
    throw FeatureDumpError(Kind::BadMagic, "bad magic: not an OSRF feature dump");
  }
  const auto version = detail::get_u32(is);
  if (!version) throw FeatureDumpError(Kind::Truncated, "truncated header");
  if (*version != kFeatureDumpVersion) {
    throw FeatureDumpError(Kind::VersionMismatch, "version mismatch: file has " + std::to_string(*version) +
                                                      ", reader supports " + std::to_string(kFeatureDumpVersion));
  }
  const auto n = detail::get_u32(is);
  const auto d = detail::get_u32(is);
  const int role = is.get();
  if (!n || !d || role == std::char_traits<char>::eof()) throw FeatureDumpError(Kind::Truncated, "truncated header");
  if (role > 3) throw FeatureDumpError(Kind::BadRole, "unknown role tag " + std::to_string(role));

  const std::size_t record = 4 + 4 * static_cast<std::size_t>(*d);
  const std::size_t expected = 17 + record * static_cast<std::size_t>(*n);
  if (bytes.size() < expected) {
    throw FeatureDumpError(Kind::Truncated, "truncated payload: " + std::to_string(bytes.size()) + " bytes, expected " +
                                                std::to_string(expected));
  }
  if (bytes.size() > expected) throw FeatureDumpError(Kind::TrailingData, "trailing bytes after last record");

  FeatureDump dump;
  dump.version = *version;
  dump.role = static_cast<DatasetRole>(role);
  dump.width = *d;
  dump.labels.reserve(*n);
  dump.features.reserve(static_cast<std::size_t>(*n) * *d);
  for (std::uint32_t r = 0; r < *n; ++r) {
    dump.labels.push_back(*detail::get_i32(is));
    for (std::uint32_t j = 0; j < *d; ++j) dump.features.push_back(*detail::get_f32(is));
  }
  return dump;
}

void write_features(const FeatureDump& dump, const std::filesystem::path& path) {
  const std::string bytes = encode_features(dump);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FeatureDumpError(Kind::Io, "cannot open for writing: " + path.string());
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw FeatureDumpError(Kind::Io, "write failed: " + path.string());
}

FeatureDump read_features(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FeatureDumpError(Kind::Io, "cannot open: " + path.string());
  std::ostringstream buf;
  buf << is.rdbuf();
  return decode_features(std::move(buf).str());
}

FeatureDump make_dump(const FeatureMatrix& features, DatasetRole role) {
  FeatureDump dump;
  dump.role = role;
  dump.width = static_cast<std::uint32_t>(features.width());
  dump.labels = features.labels();
  if (role == DatasetRole::OpenTest) std::fill(dump.labels.begin(), dump.labels.end(), -1);
  dump.features.reserve(features.values().size());
  for (double v : features.values()) dump.features.push_back(static_cast<float>(v));
  return dump;
}

FeatureMatrix to_feature_matrix(const FeatureDump& dump) {
  dump.validate();
  std::vector<double> values(dump.features.begin(), dump.features.end());
  return FeatureMatrix(dump.width, std::move(values), dump.labels);
}

OsrReport eval_external(const FeatureDump& closed_train, const FeatureDump& closed_test, const FeatureDump& open) {
  if (closed_train.role != DatasetRole::ClosedTrain) throw InvalidArgument("first dump must have role closed-train");
  if (closed_test.role != DatasetRole::ClosedTest) throw InvalidArgument("second dump must have role closed-test");
  if (open.role != DatasetRole::OpenTest) throw InvalidArgument("third dump must have role open-test");
  if (closed_test.width != closed_train.width || open.width != closed_train.width) {
    throw DimensionMismatch("feature dumps have different widths: " + std::to_string(closed_train.width) + ", " +
                            std::to_string(closed_test.width) + ", " + std::to_string(open.width));
  }
  if (closed_train.rows() == 0) throw EmptyInput("closed-train dump");

  std::int32_t max_label = -1;
  for (std::int32_t l : closed_train.labels) {
    if (l < 0) throw InvalidArgument("closed-train dump contains negative label");
    max_label = std::max(max_label, l);
  }
  const auto k = static_cast<std::size_t>(max_label) + 1;
  for (std::int32_t l : closed_test.labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= k) {
      throw InvalidArgument("closed-test label " + std::to_string(l) + " outside the closed-train label space");
    }
  }
  for (std::int32_t l : open.labels) {
    if (l != -1) throw InvalidArgument("open-test dump must contain only label -1");
  }
  return evaluate_features({to_feature_matrix(closed_train), to_feature_matrix(closed_test), to_feature_matrix(open)}, k);
}

}  // namespace osrlab
