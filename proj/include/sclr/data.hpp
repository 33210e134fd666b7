#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sclr/rng.hpp"
#include "sclr/tensor.hpp"

namespace sclr {

// Raw pixels in [0, 255], 3 x S x S row-major within channel.
struct Sample {
    std::vector<double> image;
    int fine_label = 0;
    int coarse_label = 0;  // retained from the binary format, unused
};

struct DatasetMeta {
    std::string name;
    int num_classes = 0;
    std::size_t image_size = 0;
    std::array<double, 3> channel_mean{};  // of pixel/255
    std::array<double, 3> channel_std{};
    std::size_t train_count = 0;
    std::size_t test_count = 0;

    // normalized-space bounds of the raw [0, 255] pixel domain
    std::array<double, 3> domain_lo() const;
    std::array<double, 3> domain_hi() const;
};

enum class Cifar100Split { train, test };

inline constexpr std::size_t kCifarImageSize = 32;
inline constexpr std::size_t kCifarRecordBytes = 2 + 3 * 32 * 32;

// Any file holding whole 3074-byte records: <coarse><fine><1024 R><1024 G><1024 B>.
std::vector<Sample> load_cifar_records(const std::filesystem::path& path);
// Canonical split files; additionally enforces the 50000 / 10000 record counts.
std::vector<Sample> load_cifar100(const std::filesystem::path& path, Cifar100Split split);
// Inverse of load_cifar_records; requires 32x32 images with integral pixels.
void write_cifar_records(const std::filesystem::path& path, std::span<const Sample> samples);

struct BlobDataset {
    std::vector<Sample> samples;  // grouped by class, class-major order
    std::vector<std::vector<double>> templates;
};

// Class templates are integral random pixel patterns; each sample is its
// template plus Gaussian noise (sigma in raw pixel units), rounded and clamped
// back to integers in [0, 255]. Generation fails if the templates cannot be
// separated by at least 10 * sigma * sqrt(pixels) in L2.
BlobDataset synthesize_blobs(int num_classes, int per_class, std::size_t image_size,
                             double noise_sigma, std::uint64_t seed);

DatasetMeta compute_meta(std::string name, int num_classes, std::size_t image_size,
                         std::span<const Sample> train_split);

std::vector<double> normalize_image(const std::vector<double>& image, const DatasetMeta& meta);
std::vector<double> denormalize_image(const std::vector<double>& image, const DatasetMeta& meta);
// raw B x 3 x S x S -> normalized tensor
Tensor normalize_batch(const Tensor& raw, const DatasetMeta& meta);

std::vector<double> hflip(const std::vector<double>& image, std::size_t size);
// zero-pad by `pad`, then crop back to size at offsets (dy, dx) in [0, 2*pad]
std::vector<double> pad_crop(const std::vector<double>& image, std::size_t size,
                             std::size_t pad, std::size_t dy, std::size_t dx);
// random 4-pixel pad-crop, then horizontal flip with probability 1/2
std::vector<double> augment(const std::vector<double>& image, std::size_t size, Rng& rng);

struct TwoViewBatch {
    Tensor view_a;  // raw pixels, B x 3 x S x S
    Tensor view_b;
    std::vector<int> labels;
};

// Two independent augmentations of the same samples; identical copies when
// augmentation is disabled. Draw order per sample: A(dy, dx, flip) then B.
TwoViewBatch make_two_view_batch(std::span<const Sample> samples, std::size_t image_size,
                                 Rng& rng, bool augment_enabled);

}  // namespace sclr
