#pragma once

#include <filesystem>

#include "cine/volume.hpp"

namespace cine::io {

enum class Format { Nifti1, Raw };

// .nii / .img / .hdr with a NIfTI magic -> Nifti1; .bin -> Raw.
Format format_from_path(const std::filesystem::path& path);

// Single-file little-endian NIfTI-1 ("n+1") or header/image pairs ("ni1"),
// datatypes uint8, int16, float32 and complex64. Raw volumes are a float32 /
// complex64 / uint8 payload `<name>.bin` with a `<name>.hdr` key=value sidecar.
CineVolume load_volume(const std::filesystem::path& path, Format format);
CineVolume load_volume(const std::filesystem::path& path);

// Real volumes are written as float32, complex ones as interleaved complex64.
void save_volume(const CineVolume& volume, const std::filesystem::path& path, Format format);
void save_volume(const CineVolume& volume, const std::filesystem::path& path);

LabelMap load_labels(const std::filesystem::path& path, Format format);
LabelMap load_labels(const std::filesystem::path& path);
void save_labels(const LabelMap& labels, const std::filesystem::path& path, Format format);
void save_labels(const LabelMap& labels, const std::filesystem::path& path);

}  // namespace cine::io
