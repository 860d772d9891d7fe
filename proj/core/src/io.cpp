#include "cine/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "cine/error.hpp"

static_assert(std::endian::native == std::endian::little, "only little-endian hosts are supported");

namespace cine::io {
namespace {

namespace fs = std::filesystem;

enum class DType { UInt8, Int16, Float32, Complex64 };

constexpr short kNiftiUInt8 = 2;
constexpr short kNiftiInt16 = 4;
constexpr short kNiftiFloat32 = 16;
constexpr short kNiftiComplex64 = 32;
constexpr int kHeaderSize = 348;
constexpr int kVoxOffset = 352;

std::size_t dtype_bytes(DType t) {
  switch (t) {
    case DType::UInt8: return 1;
    case DType::Int16: return 2;
    case DType::Float32: return 4;
    case DType::Complex64: return 8;
  }
  return 0;
}

// Decoded payload, before it is turned into a volume or a label map.
struct Payload {
  Shape4 shape;
  Geometry geometry;
  DType dtype = DType::Float32;
  double slope = 0.0;
  double inter = 0.0;
  std::vector<char> bytes;
};

template <typename T>
T get(const std::array<char, kHeaderSize>& h, std::size_t offset) {
  T v;
  std::memcpy(&v, h.data() + offset, sizeof(T));
  return v;
}

template <typename T>
void put(std::array<char, kHeaderSize>& h, std::size_t offset, T v) {
  std::memcpy(h.data() + offset, &v, sizeof(T));
}

std::vector<char> read_bytes(std::ifstream& in, std::size_t n, const fs::path& path) {
  std::vector<char> buf(n);
  in.read(buf.data(), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n)
    fail(ErrorCode::CorruptHeader, "payload shorter than header dimensions: " + path.string());
  return buf;
}

// "cine:dx=1.8;dy=1.8;thickness=8;gap=2;tr=2.6" carried in the NIfTI descrip field.
void parse_descrip(const std::string& descrip, Geometry& g) {
  if (descrip.rfind("cine:", 0) != 0) return;
  std::istringstream ss(descrip.substr(5));
  std::string item;
  while (std::getline(ss, item, ';')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = item.substr(0, eq);
    const double value = std::strtod(item.c_str() + eq + 1, nullptr);
    if (key == "dx") g.dx_mm = value;
    else if (key == "dy") g.dy_mm = value;
    else if (key == "thickness") g.slice_thickness_mm = value;
    else if (key == "gap") g.slice_gap_mm = value;
    else if (key == "tr") g.tr_ms = value;
  }
}

Payload read_nifti(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::array<char, kHeaderSize> h{};
  in.read(h.data(), kHeaderSize);
  if (in.gcount() != kHeaderSize) fail(ErrorCode::CorruptHeader, "truncated NIfTI header: " + path.string());

  const int sizeof_hdr = get<int>(h, 0);
  if (sizeof_hdr != kHeaderSize) {
    const auto u = static_cast<std::uint32_t>(sizeof_hdr);
    const std::uint32_t swapped = (u >> 24) | ((u >> 8) & 0xff00u) | ((u << 8) & 0xff0000u) | (u << 24);
    if (swapped == static_cast<std::uint32_t>(kHeaderSize))
      fail(ErrorCode::CorruptHeader, "big-endian NIfTI is not supported: " + path.string());
    fail(ErrorCode::CorruptHeader, "sizeof_hdr != 348: " + path.string());
  }
  const char* magic = h.data() + 344;
  const bool single_file = std::memcmp(magic, "n+1\0", 4) == 0;
  const bool pair_file = std::memcmp(magic, "ni1\0", 4) == 0;
  if (!single_file && !pair_file) fail(ErrorCode::CorruptHeader, "bad NIfTI magic: " + path.string());

  std::array<short, 8> dim{};
  for (int i = 0; i < 8; ++i) dim[i] = get<short>(h, 40 + 2 * i);
  if (dim[0] < 1 || dim[0] > 7) fail(ErrorCode::CorruptHeader, "dim[0] out of range");
  if (dim[0] < 2 || dim[0] > 4) fail(ErrorCode::Dimension, "only 2-4 dimensional images are supported");
  for (int i = 1; i <= dim[0]; ++i)
    if (dim[i] < 1) fail(ErrorCode::CorruptHeader, "non-positive dimension in header");

  Payload p;
  switch (get<short>(h, 70)) {
    case kNiftiUInt8: p.dtype = DType::UInt8; break;
    case kNiftiInt16: p.dtype = DType::Int16; break;
    case kNiftiFloat32: p.dtype = DType::Float32; break;
    case kNiftiComplex64: p.dtype = DType::Complex64; break;
    default: fail(ErrorCode::UnsupportedDatatype, "NIfTI datatype " + std::to_string(get<short>(h, 70)));
  }
  if (get<short>(h, 72) != static_cast<short>(8 * dtype_bytes(p.dtype)))
    fail(ErrorCode::CorruptHeader, "bitpix does not match datatype");

  p.shape.nx = dim[1];
  p.shape.ny = dim[2];
  p.shape.nslices = dim[0] >= 3 ? dim[3] : 1;
  p.shape.nframes = dim[0] >= 4 ? dim[4] : 1;

  std::array<float, 8> pixdim{};
  for (int i = 0; i < 8; ++i) pixdim[i] = get<float>(h, 76 + 4 * i);
  p.geometry.dx_mm = pixdim[1] > 0 ? pixdim[1] : 1.0;
  p.geometry.dy_mm = pixdim[2] > 0 ? pixdim[2] : 1.0;
  if (dim[0] >= 3 && pixdim[3] > 0) {
    p.geometry.slice_thickness_mm = pixdim[3];
    p.geometry.slice_gap_mm = 0.0;
  }
  p.geometry.n_frames = p.shape.nframes;
  std::string descrip(h.data() + 148, 80);
  descrip = descrip.c_str();
  parse_descrip(descrip, p.geometry);

  p.slope = get<float>(h, 112);
  p.inter = get<float>(h, 116);

  const std::size_t n_bytes = p.shape.size() * dtype_bytes(p.dtype);
  if (single_file) {
    const float vox_offset = get<float>(h, 108);
    if (vox_offset < kHeaderSize) fail(ErrorCode::CorruptHeader, "vox_offset inside header");
    in.seekg(static_cast<std::streamoff>(vox_offset));
    p.bytes = read_bytes(in, n_bytes, path);
  } else {
    fs::path img = path;
    img.replace_extension(".img");
    std::ifstream data(img, std::ios::binary);
    if (!data) fail(ErrorCode::Io, "cannot open image file " + img.string());
    p.bytes = read_bytes(data, n_bytes, img);
  }
  return p;
}

void write_nifti(const fs::path& path, const Shape4& shape, const Geometry& g, DType dtype,
                 const char* payload, std::size_t n_bytes) {
  std::array<char, kHeaderSize> h{};
  put<int>(h, 0, kHeaderSize);
  put<char>(h, 38, 'r');
  const short ndim = 4;
  const std::array<short, 8> dim{ndim,
                                 static_cast<short>(shape.nx),
                                 static_cast<short>(shape.ny),
                                 static_cast<short>(shape.nslices),
                                 static_cast<short>(shape.nframes),
                                 1,
                                 1,
                                 1};
  for (int i = 0; i < 8; ++i) put<short>(h, 40 + 2 * i, dim[i]);
  short code = kNiftiFloat32;
  switch (dtype) {
    case DType::UInt8: code = kNiftiUInt8; break;
    case DType::Int16: code = kNiftiInt16; break;
    case DType::Float32: code = kNiftiFloat32; break;
    case DType::Complex64: code = kNiftiComplex64; break;
  }
  put<short>(h, 70, code);
  put<short>(h, 72, static_cast<short>(8 * dtype_bytes(dtype)));
  const double frame_ms = g.tr_ms;
  const std::array<float, 8> pixdim{1.0f,
                                    static_cast<float>(g.dx_mm),
                                    static_cast<float>(g.dy_mm),
                                    static_cast<float>(g.slice_spacing_mm()),
                                    static_cast<float>(frame_ms),
                                    1.0f,
                                    1.0f,
                                    1.0f};
  for (int i = 0; i < 8; ++i) put<float>(h, 76 + 4 * i, pixdim[i]);
  put<float>(h, 108, static_cast<float>(kVoxOffset));
  put<float>(h, 112, 0.0f);
  put<float>(h, 116, 0.0f);
  put<char>(h, 123, static_cast<char>(2 | 16));  // mm, ms
  std::ostringstream descrip;
  descrip.precision(10);
  descrip << "cine:dx=" << g.dx_mm << ";dy=" << g.dy_mm << ";thickness=" << g.slice_thickness_mm << ";gap=" << g.slice_gap_mm << ";tr=" << g.tr_ms;
  const std::string d = descrip.str().substr(0, 79);
  std::memcpy(h.data() + 148, d.data(), d.size());
  put<short>(h, 254, 0);
  std::memcpy(h.data() + 344, "n+1\0", 4);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out.write(h.data(), kHeaderSize);
  const std::array<char, 4> extension{};
  out.write(extension.data(), extension.size());
  out.write(payload, static_cast<std::streamsize>(n_bytes));
  if (!out) fail(ErrorCode::Io, "write failed: " + path.string());
}

fs::path raw_header_path(const fs::path& path) {
  fs::path hdr = path;
  hdr.replace_extension(".hdr");
  return hdr;
}

fs::path raw_data_path(const fs::path& path) {
  fs::path bin = path;
  bin.replace_extension(".bin");
  return bin;
}

std::map<std::string, std::string> read_key_values(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCode::CorruptHeader, "malformed header line: " + line);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

Payload read_raw(const fs::path& path) {
  const auto kv = read_key_values(raw_header_path(path));
  auto need = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) fail(ErrorCode::CorruptHeader, "raw header lacks key " + key);
    return it->second;
  };
  auto as_int = [&](const std::string& key) {
    const std::string& s = need(key);
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || v < 1)
      fail(ErrorCode::CorruptHeader, "bad integer for " + key);
    return v;
  };
  auto as_double = [&](const std::string& key, double fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    char* end = nullptr;
    const double v = std::strtod(it->second.c_str(), &end);
    if (end == it->second.c_str()) fail(ErrorCode::CorruptHeader, "bad number for " + key);
    return v;
  };

  Payload p;
  p.shape = {as_int("nx"), as_int("ny"), as_int("nslices"), as_int("nframes")};
  p.geometry.dx_mm = as_double("dx_mm", 1.8);
  p.geometry.dy_mm = as_double("dy_mm", 1.8);
  p.geometry.slice_thickness_mm = as_double("thickness_mm", 8.0);
  p.geometry.slice_gap_mm = as_double("gap_mm", 2.0);
  p.geometry.tr_ms = as_double("tr_ms", 2.6);
  p.geometry.n_frames = p.shape.nframes;
  const std::string& dtype = need("dtype");
  if (dtype == "float32") p.dtype = DType::Float32;
  else if (dtype == "complex64") p.dtype = DType::Complex64;
  else if (dtype == "uint8") p.dtype = DType::UInt8;
  else fail(ErrorCode::UnsupportedDatatype, "raw dtype " + dtype);

  const fs::path bin = raw_data_path(path);
  std::ifstream in(bin, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + bin.string());
  p.bytes = read_bytes(in, p.shape.size() * dtype_bytes(p.dtype), bin);
  return p;
}

void write_raw(const fs::path& path, const Shape4& shape, const Geometry& g, DType dtype,
               const char* payload, std::size_t n_bytes) {
  const fs::path hdr = raw_header_path(path);
  std::ofstream h(hdr, std::ios::trunc);
  if (!h) fail(ErrorCode::Io, "cannot write " + hdr.string());
  h.precision(17);
  h << "nx=" << shape.nx << "\nny=" << shape.ny << "\nnslices=" << shape.nslices
    << "\nnframes=" << shape.nframes << "\ndx_mm=" << g.dx_mm << "\ndy_mm=" << g.dy_mm
    << "\nthickness_mm=" << g.slice_thickness_mm << "\ngap_mm=" << g.slice_gap_mm
    << "\ntr_ms=" << g.tr_ms << "\ndtype="
    << (dtype == DType::Complex64 ? "complex64" : dtype == DType::UInt8 ? "uint8" : "float32") << "\n";
  if (!h) fail(ErrorCode::Io, "write failed: " + hdr.string());

  const fs::path bin = raw_data_path(path);
  std::ofstream out(bin, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + bin.string());
  out.write(payload, static_cast<std::streamsize>(n_bytes));
  if (!out) fail(ErrorCode::Io, "write failed: " + bin.string());
}

Payload read_payload(const fs::path& path, Format format) {
  return format == Format::Nifti1 ? read_nifti(path) : read_raw(path);
}

void write_payload(const fs::path& path, Format format, const Shape4& shape, const Geometry& g,
                   DType dtype, const std::vector<char>& bytes) {
  if (path.has_parent_path() && !fs::is_directory(path.parent_path()))
    fail(ErrorCode::Io, "parent directory does not exist: " + path.parent_path().string());
  if (format == Format::Nifti1)
    write_nifti(path, shape, g, dtype, bytes.data(), bytes.size());
  else
    write_raw(path, shape, g, dtype, bytes.data(), bytes.size());
}

}  // namespace

Format format_from_path(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".bin") return Format::Raw;
  if (ext == ".hdr" && std::filesystem::exists(raw_data_path(path))) return Format::Raw;
  return Format::Nifti1;
}

CineVolume load_volume(const std::filesystem::path& path, Format format) {
  Payload p = read_payload(path, format);
  std::vector<cplx> values(p.shape.size());
  const bool scaled = p.slope != 0.0 && !(p.slope == 1.0 && p.inter == 0.0);
  const char* src = p.bytes.data();
  switch (p.dtype) {
    case DType::UInt8:
      for (std::size_t i = 0; i < values.size(); ++i)
        values[i] = static_cast<double>(static_cast<unsigned char>(src[i]));
      break;
    case DType::Int16:
      for (std::size_t i = 0; i < values.size(); ++i) {
        std::int16_t v;
        std::memcpy(&v, src + 2 * i, 2);
        values[i] = static_cast<double>(v);
      }
      break;
    case DType::Float32:
      for (std::size_t i = 0; i < values.size(); ++i) {
        float v;
        std::memcpy(&v, src + 4 * i, 4);
        values[i] = static_cast<double>(v);
      }
      break;
    case DType::Complex64:
      for (std::size_t i = 0; i < values.size(); ++i) {
        float re, im;
        std::memcpy(&re, src + 8 * i, 4);
        std::memcpy(&im, src + 8 * i + 4, 4);
        values[i] = cplx(re, im);
      }
      break;
  }
  if (scaled && p.dtype != DType::Complex64)
    for (cplx& v : values) v = p.slope * v.real() + p.inter;
  CineVolume vol(p.shape, p.geometry, std::move(values), p.dtype == DType::Complex64);
  for (const cplx& v : vol.data())
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      fail(ErrorCode::NonFiniteImage, "non-finite voxel in " + path.string());
  return vol;
}

CineVolume load_volume(const std::filesystem::path& path) { return load_volume(path, format_from_path(path)); }

void save_volume(const CineVolume& volume, const std::filesystem::path& path, Format format) {
  const auto data = volume.data();
  const DType dtype = volume.is_complex() ? DType::Complex64 : DType::Float32;
  std::vector<char> bytes(data.size() * dtype_bytes(dtype));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const float re = static_cast<float>(data[i].real());
    if (dtype == DType::Complex64) {
      const float im = static_cast<float>(data[i].imag());
      std::memcpy(bytes.data() + 8 * i, &re, 4);
      std::memcpy(bytes.data() + 8 * i + 4, &im, 4);
    } else {
      std::memcpy(bytes.data() + 4 * i, &re, 4);
    }
  }
  write_payload(path, format, volume.shape(), volume.geometry(), dtype, bytes);
}

void save_volume(const CineVolume& volume, const std::filesystem::path& path) {
  save_volume(volume, path, format_from_path(path));
}

LabelMap load_labels(const std::filesystem::path& path, Format format) {
  Payload p = read_payload(path, format);
  LabelMap labels(p.shape, p.geometry);
  auto out = labels.data();
  const char* src = p.bytes.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    double v = 0;
    switch (p.dtype) {
      case DType::UInt8: v = static_cast<unsigned char>(src[i]); break;
      case DType::Int16: {
        std::int16_t s;
        std::memcpy(&s, src + 2 * i, 2);
        v = s;
        break;
      }
      case DType::Float32: {
        float f;
        std::memcpy(&f, src + 4 * i, 4);
        v = f;
        break;
      }
      case DType::Complex64: fail(ErrorCode::UnsupportedDatatype, "complex label map");
    }
    if (v < 0 || v > static_cast<double>(kRvBloodPool) || v != std::floor(v))
      fail(ErrorCode::Spec, "label code outside {0,1,2,3} in " + path.string());
    out[i] = static_cast<std::uint8_t>(v);
  }
  return labels;
}

LabelMap load_labels(const std::filesystem::path& path) { return load_labels(path, format_from_path(path)); }

void save_labels(const LabelMap& labels, const std::filesystem::path& path, Format format) {
  const auto data = labels.data();
  std::vector<char> bytes(data.begin(), data.end());
  write_payload(path, format, labels.shape(), labels.geometry(), DType::UInt8, bytes);
}

void save_labels(const LabelMap& labels, const std::filesystem::path& path) {
  save_labels(labels, path, format_from_path(path));
}

}  // namespace cine::io
