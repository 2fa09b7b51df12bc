#include "bigreg/volume_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "bigreg/error.hpp"
#include "json.hpp"

namespace bigreg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path base_of(const fs::path& path) {
  const auto ext = path.extension();
  if (ext == ".raw" || ext == ".json") return fs::path(path).replace_extension();
  return path;
}

std::vector<char> read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<char> buf(size);
  if (size && !in.read(buf.data(), static_cast<std::streamsize>(size)))
    throw IoError("failed reading " + path.string());
  return buf;
}

}  // namespace

fs::path sidecar_path(const fs::path& path) {
  fs::path p = base_of(path);
  p += ".json";
  return p;
}

fs::path payload_path(const fs::path& path) {
  fs::path p = base_of(path);
  p += ".raw";
  return p;
}

Volume load_volume(const fs::path& path) {
  const auto meta_bytes = read_all(sidecar_path(path));
  json meta;
  try {
    meta = json::parse(meta_bytes.begin(), meta_bytes.end());
  } catch (const json::exception& e) {
    throw FormatError("volume sidecar " + sidecar_path(path).string() + ": " + e.what());
  }

  Dims dims;
  Eigen::Vector3d voxel;
  std::string dtype = "float32";
  try {
    const auto& jd = meta.at("dims");
    const auto& jv = meta.at("voxel_size_um");
    if (jd.size() != 3 || jv.size() != 3) throw FormatError("dims and voxel_size_um need 3 entries");
    dims = {jd[0].get<int>(), jd[1].get<int>(), jd[2].get<int>()};
    voxel = {jv[0].get<double>(), jv[1].get<double>(), jv[2].get<double>()};
    if (meta.contains("dtype")) dtype = meta["dtype"].get<std::string>();
    if (meta.contains("byte_order") && meta["byte_order"].get<std::string>() != "little")
      throw FormatError("only little-endian payloads are supported");
  } catch (const json::exception& e) {
    throw FormatError("volume sidecar " + sidecar_path(path).string() + ": " + e.what());
  }
  if (!dims.positive()) throw FormatError("volume sidecar: dims must be positive");
  if (!(voxel.array() > 0.0).all()) throw FormatError("volume sidecar: voxel sizes must be positive");

  const auto payload = read_all(payload_path(path));
  std::vector<float> data(dims.count());
  if (dtype == "float32") {
    if (payload.size() != dims.count() * sizeof(float))
      throw FormatError("payload holds " + std::to_string(payload.size() / sizeof(float)) +
                        " float32 voxels, sidecar dims " + dims.str() + " need " +
                        std::to_string(dims.count()));
    std::memcpy(data.data(), payload.data(), payload.size());
    if constexpr (std::endian::native == std::endian::big) {
      for (auto& f : data) f = std::bit_cast<float>(__builtin_bswap32(std::bit_cast<std::uint32_t>(f)));
    }
  } else if (dtype == "uint8") {
    if (payload.size() != dims.count())
      throw FormatError("payload holds " + std::to_string(payload.size()) +
                        " uint8 voxels, sidecar dims " + dims.str() + " need " +
                        std::to_string(dims.count()));
    for (std::size_t i = 0; i < data.size(); ++i)
      data[i] = static_cast<float>(static_cast<unsigned char>(payload[i]));
  } else {
    throw FormatError("unsupported dtype '" + dtype + "'");
  }
  return Volume(dims, voxel, std::move(data));
}

void save_volume(const Volume& v, const fs::path& path) {
  const auto& d = v.dims();
  json meta;
  meta["dims"] = {d.x, d.y, d.z};
  meta["voxel_size_um"] = {v.voxel_size().x(), v.voxel_size().y(), v.voxel_size().z()};
  meta["intensity_range"] = {v.min_value(), v.max_value()};
  meta["dtype"] = "float32";
  meta["byte_order"] = "little";

  {
    std::ofstream out(payload_path(path), std::ios::binary);
    if (!out) throw IoError("cannot open " + payload_path(path).string() + " for writing");
    const auto data = v.data();
    if constexpr (std::endian::native == std::endian::little) {
      out.write(reinterpret_cast<const char*>(data.data()),
                static_cast<std::streamsize>(data.size() * sizeof(float)));
    } else {
      for (float f : data) {
        const auto w = __builtin_bswap32(std::bit_cast<std::uint32_t>(f));
        out.write(reinterpret_cast<const char*>(&w), sizeof w);
      }
    }
    if (!out) throw IoError("failed writing " + payload_path(path).string());
  }
  std::ofstream out(sidecar_path(path));
  if (!out) throw IoError("cannot open " + sidecar_path(path).string() + " for writing");
  out << meta.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + sidecar_path(path).string());
}

Image8 central_slice(const Volume& v, SlicePlane plane) {
  const Dims& d = v.dims();
  Image8 img;
  auto px = [](float f) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(f), 0L, 255L));
  };
  switch (plane) {
    case SlicePlane::XY: {
      img.width = d.x;
      img.height = d.y;
      const int k = d.z / 2;
      for (int j = 0; j < d.y; ++j)
        for (int i = 0; i < d.x; ++i) img.pixels.push_back(px(v.at(i, j, k)));
      break;
    }
    case SlicePlane::XZ: {
      img.width = d.x;
      img.height = d.z;
      const int j = d.y / 2;
      for (int k = 0; k < d.z; ++k)
        for (int i = 0; i < d.x; ++i) img.pixels.push_back(px(v.at(i, j, k)));
      break;
    }
    case SlicePlane::YZ: {
      img.width = d.y;
      img.height = d.z;
      const int i = d.x / 2;
      for (int k = 0; k < d.z; ++k)
        for (int j = 0; j < d.y; ++j) img.pixels.push_back(px(v.at(i, j, k)));
      break;
    }
  }
  return img;
}

Image8 checkerboard(const Image8& a, const Image8& b, int tile) {
  if (a.width != b.width || a.height != b.height)
    throw DimsMismatch("checkerboard: images differ in size");
  if (tile <= 0) throw InvalidArgument("checkerboard: tile must be positive");
  Image8 out = a;
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < a.width; ++x)
      if (((x / tile) + (y / tile)) % 2 == 1)
        out.pixels[static_cast<std::size_t>(y) * a.width + x] =
            b.pixels[static_cast<std::size_t>(y) * a.width + x];
  return out;
}

void write_pgm(const Image8& img, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace bigreg
