#include "sclr/data.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "sclr/errors.hpp"

namespace sclr {

namespace {

constexpr std::size_t kChannels = 3;

std::size_t image_elems(std::size_t size) { return kChannels * size * size; }

}  // namespace

std::array<double, 3> DatasetMeta::domain_lo() const {
    std::array<double, 3> lo{};
    for (std::size_t c = 0; c < 3; ++c) lo[c] = (0.0 - channel_mean[c]) / channel_std[c];
    return lo;
}

std::array<double, 3> DatasetMeta::domain_hi() const {
    std::array<double, 3> hi{};
    for (std::size_t c = 0; c < 3; ++c) hi[c] = (1.0 - channel_mean[c]) / channel_std[c];
    return hi;
}

std::vector<Sample> load_cifar_records(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    in.seekg(0, std::ios::end);
    const std::size_t bytes = static_cast<std::size_t>(in.tellg());
    in.seekg(0, std::ios::beg);
    if (bytes % kCifarRecordBytes != 0)
        throw IoError("'" + path.string() + "': size " + std::to_string(bytes) +
                      " is not a multiple of " + std::to_string(kCifarRecordBytes) + " (" +
                      std::to_string(bytes / kCifarRecordBytes) + " complete records plus " +
                      std::to_string(bytes % kCifarRecordBytes) + " bytes)");

    const std::size_t count = bytes / kCifarRecordBytes;
    std::vector<Sample> samples;
    samples.reserve(count);
    std::vector<unsigned char> rec(kCifarRecordBytes);
    for (std::size_t r = 0; r < count; ++r) {
        in.read(reinterpret_cast<char*>(rec.data()), static_cast<std::streamsize>(rec.size()));
        if (!in) throw IoError("'" + path.string() + "': short read at record " + std::to_string(r));
        Sample s;
        s.coarse_label = rec[0];
        s.fine_label = rec[1];
        if (s.coarse_label >= 100 || s.fine_label >= 100)
            throw IoError("'" + path.string() + "': corrupt record " + std::to_string(r) +
                          " (label byte >= 100)");
        s.image.resize(3 * 32 * 32);
        for (std::size_t i = 0; i < s.image.size(); ++i)
            s.image[i] = static_cast<double>(rec[2 + i]);
        samples.push_back(std::move(s));
    }
    return samples;
}

std::vector<Sample> load_cifar100(const std::filesystem::path& path, Cifar100Split split) {
    const std::size_t expected = split == Cifar100Split::train ? 50000 : 10000;
    std::error_code ec;
    const auto actual_bytes = std::filesystem::file_size(path, ec);
    if (!ec && actual_bytes % kCifarRecordBytes == 0 &&
        actual_bytes / kCifarRecordBytes != expected)
        throw IoError("'" + path.string() + "': expected " + std::to_string(expected) +
                      " records (" + std::to_string(expected * kCifarRecordBytes) +
                      " bytes) for the " +
                      (split == Cifar100Split::train ? std::string("train") : std::string("test")) +
                      " split, got " + std::to_string(actual_bytes / kCifarRecordBytes) + " (" +
                      std::to_string(actual_bytes) + " bytes)");
    auto samples = load_cifar_records(path);
    if (samples.size() != expected)
        throw IoError("'" + path.string() + "': expected " + std::to_string(expected) +
                      " records, got " + std::to_string(samples.size()));
    return samples;
}

void write_cifar_records(const std::filesystem::path& path, std::span<const Sample> samples) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    std::vector<unsigned char> rec(kCifarRecordBytes);
    for (std::size_t r = 0; r < samples.size(); ++r) {
        const Sample& s = samples[r];
        if (s.image.size() != 3 * 32 * 32)
            throw std::invalid_argument("write_cifar_records: record " + std::to_string(r) +
                                        " is not a 3x32x32 image");
        if (s.fine_label < 0 || s.fine_label > 255 || s.coarse_label < 0 || s.coarse_label > 255)
            throw std::invalid_argument("write_cifar_records: label out of byte range");
        rec[0] = static_cast<unsigned char>(s.coarse_label);
        rec[1] = static_cast<unsigned char>(s.fine_label);
        for (std::size_t i = 0; i < s.image.size(); ++i) {
            const double v = s.image[i];
            const double rounded = std::nearbyint(v);
            if (std::abs(v - rounded) > 1e-9 || rounded < 0.0 || rounded > 255.0)
                throw std::invalid_argument("write_cifar_records: pixel " + std::to_string(v) +
                                            " in record " + std::to_string(r) +
                                            " is not an integer in [0, 255]");
            rec[2 + i] = static_cast<unsigned char>(rounded);
        }
        out.write(reinterpret_cast<const char*>(rec.data()), static_cast<std::streamsize>(rec.size()));
    }
    if (!out) throw IoError("short write to '" + path.string() + "'");
}

BlobDataset synthesize_blobs(int num_classes, int per_class, std::size_t image_size,
                             double noise_sigma, std::uint64_t seed) {
    if (num_classes < 2)
        throw std::invalid_argument("synthesize_blobs: num_classes must be >= 2, got " +
                                    std::to_string(num_classes));
    if (per_class < 1) throw std::invalid_argument("synthesize_blobs: per_class must be >= 1");
    if (image_size < 1) throw std::invalid_argument("synthesize_blobs: image_size must be >= 1");
    if (noise_sigma < 0.0) throw std::invalid_argument("synthesize_blobs: noise_sigma must be >= 0");

    const std::size_t elems = image_elems(image_size);
    const double min_dist = 10.0 * noise_sigma * std::sqrt(static_cast<double>(elems));

    Rng template_rng(derive_seed(seed, 0x7e3a11a7e5ULL));
    BlobDataset out;
    constexpr int kMaxAttempts = 16;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        out.templates.clear();
        for (int k = 0; k < num_classes; ++k) {
            std::vector<double> t(elems);
            for (double& v : t) v = static_cast<double>(template_rng.below(256));
            out.templates.push_back(std::move(t));
        }
        bool ok = true;
        for (int a = 0; a < num_classes && ok; ++a)
            for (int b = a + 1; b < num_classes && ok; ++b) {
                double sq = 0.0;
                for (std::size_t i = 0; i < elems; ++i) {
                    const double d = out.templates[static_cast<std::size_t>(a)][i] -
                                     out.templates[static_cast<std::size_t>(b)][i];
                    sq += d * d;
                }
                if (std::sqrt(sq) < min_dist) ok = false;
            }
        if (ok) break;
        if (attempt + 1 == kMaxAttempts)
            throw std::invalid_argument(
                "synthesize_blobs: cannot separate " + std::to_string(num_classes) +
                " templates by " + std::to_string(min_dist) +
                " (noise_sigma too large for this image size)");
    }

    Rng noise_rng(derive_seed(seed, 0x0153e5ULL));
    for (int k = 0; k < num_classes; ++k) {
        const auto& tmpl = out.templates[static_cast<std::size_t>(k)];
        for (int s = 0; s < per_class; ++s) {
            Sample sample;
            sample.fine_label = k;
            sample.coarse_label = k;
            sample.image.resize(elems);
            for (std::size_t i = 0; i < elems; ++i) {
                double v = tmpl[i];
                if (noise_sigma > 0.0) v += noise_sigma * noise_rng.normal();
                v = std::nearbyint(v);
                sample.image[i] = std::min(255.0, std::max(0.0, v));
            }
            out.samples.push_back(std::move(sample));
        }
    }
    return out;
}

DatasetMeta compute_meta(std::string name, int num_classes, std::size_t image_size,
                         std::span<const Sample> train_split) {
    if (train_split.empty()) throw std::invalid_argument("compute_meta: empty training split");
    const std::size_t plane = image_size * image_size;
    DatasetMeta meta;
    meta.name = std::move(name);
    meta.num_classes = num_classes;
    meta.image_size = image_size;
    meta.train_count = train_split.size();

    for (std::size_t c = 0; c < kChannels; ++c) {
        double sum = 0.0, sum_sq = 0.0;
        for (const Sample& s : train_split) {
            const double* p = s.image.data() + c * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                const double v = p[i] / 255.0;
                sum += v;
                sum_sq += v * v;
            }
        }
        const double n = static_cast<double>(train_split.size() * plane);
        const double mean = sum / n;
        const double var = sum_sq / n - mean * mean;
        meta.channel_mean[c] = mean;
        meta.channel_std[c] = std::sqrt(std::max(var, 0.0));
        if (!(meta.channel_std[c] > 0.0))
            throw std::invalid_argument("compute_meta: channel " + std::to_string(c) +
                                        " has zero standard deviation");
    }
    return meta;
}

std::vector<double> normalize_image(const std::vector<double>& image, const DatasetMeta& meta) {
    const std::size_t plane = meta.image_size * meta.image_size;
    if (image.size() != kChannels * plane)
        throw std::invalid_argument("normalize_image: image size " + std::to_string(image.size()) +
                                    " does not match meta");
    std::vector<double> out(image.size());
    for (std::size_t c = 0; c < kChannels; ++c) {
        const double inv_std = 1.0 / meta.channel_std[c];
        for (std::size_t i = 0; i < plane; ++i)
            out[c * plane + i] = (image[c * plane + i] / 255.0 - meta.channel_mean[c]) * inv_std;
    }
    return out;
}

std::vector<double> denormalize_image(const std::vector<double>& image, const DatasetMeta& meta) {
    const std::size_t plane = meta.image_size * meta.image_size;
    std::vector<double> out(image.size());
    for (std::size_t c = 0; c < kChannels; ++c)
        for (std::size_t i = 0; i < plane; ++i)
            out[c * plane + i] =
                (image[c * plane + i] * meta.channel_std[c] + meta.channel_mean[c]) * 255.0;
    return out;
}

Tensor normalize_batch(const Tensor& raw, const DatasetMeta& meta) {
    if (raw.rank() != 4) throw std::invalid_argument("normalize_batch: expected rank-4 batch");
    const std::size_t b_n = raw.dim(0);
    const std::size_t plane = raw.dim(2) * raw.dim(3);
    std::vector<double> out(raw.size());
    for (std::size_t b = 0; b < b_n; ++b)
        for (std::size_t c = 0; c < kChannels; ++c) {
            const double inv_std = 1.0 / meta.channel_std[c];
            const std::size_t base = (b * kChannels + c) * plane;
            for (std::size_t i = 0; i < plane; ++i)
                out[base + i] = (raw.data()[base + i] / 255.0 - meta.channel_mean[c]) * inv_std;
        }
    return Tensor(raw.shape(), std::move(out));
}

std::vector<double> hflip(const std::vector<double>& image, std::size_t size) {
    std::vector<double> out(image.size());
    for (std::size_t c = 0; c < kChannels; ++c)
        for (std::size_t y = 0; y < size; ++y)
            for (std::size_t x = 0; x < size; ++x)
                out[(c * size + y) * size + x] = image[(c * size + y) * size + (size - 1 - x)];
    return out;
}

std::vector<double> pad_crop(const std::vector<double>& image, std::size_t size,
                             std::size_t pad, std::size_t dy, std::size_t dx) {
    if (dy > 2 * pad || dx > 2 * pad)
        throw std::invalid_argument("pad_crop: offsets must lie in [0, 2*pad]");
    std::vector<double> out(image.size(), 0.0);
    // Crop window starts at (dy, dx) in the zero-padded image; padded pixel
    // (py, px) maps to source (py - pad, px - pad).
    for (std::size_t c = 0; c < kChannels; ++c)
        for (std::size_t y = 0; y < size; ++y) {
            const std::ptrdiff_t sy =
                static_cast<std::ptrdiff_t>(y + dy) - static_cast<std::ptrdiff_t>(pad);
            if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(size)) continue;
            for (std::size_t x = 0; x < size; ++x) {
                const std::ptrdiff_t sx =
                    static_cast<std::ptrdiff_t>(x + dx) - static_cast<std::ptrdiff_t>(pad);
                if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(size)) continue;
                out[(c * size + y) * size + x] =
                    image[(c * size + static_cast<std::size_t>(sy)) * size +
                          static_cast<std::size_t>(sx)];
            }
        }
    return out;
}

std::vector<double> augment(const std::vector<double>& image, std::size_t size, Rng& rng) {
    constexpr std::size_t kPad = 4;
    const std::size_t dy = rng.below(2 * kPad + 1);
    const std::size_t dx = rng.below(2 * kPad + 1);
    const bool flip = rng.coin();
    std::vector<double> out = pad_crop(image, size, kPad, dy, dx);
    if (flip) out = hflip(out, size);
    return out;
}

TwoViewBatch make_two_view_batch(std::span<const Sample> samples, std::size_t image_size,
                                 Rng& rng, bool augment_enabled) {
    if (samples.empty()) throw std::invalid_argument("make_two_view_batch: empty sample list");
    const std::size_t elems = image_elems(image_size);
    const std::size_t b_n = samples.size();
    std::vector<double> a(b_n * elems), b(b_n * elems);
    TwoViewBatch out;
    out.labels.reserve(b_n);
    for (std::size_t i = 0; i < b_n; ++i) {
        const Sample& s = samples[i];
        if (s.image.size() != elems)
            throw std::invalid_argument("make_two_view_batch: sample " + std::to_string(i) +
                                        " has unexpected image size");
        if (augment_enabled) {
            const auto va = augment(s.image, image_size, rng);
            const auto vb = augment(s.image, image_size, rng);
            std::memcpy(a.data() + i * elems, va.data(), elems * sizeof(double));
            std::memcpy(b.data() + i * elems, vb.data(), elems * sizeof(double));
        } else {
            std::memcpy(a.data() + i * elems, s.image.data(), elems * sizeof(double));
            std::memcpy(b.data() + i * elems, s.image.data(), elems * sizeof(double));
        }
        out.labels.push_back(s.fine_label);
    }
    const Shape shape{b_n, kChannels, image_size, image_size};
    out.view_a = Tensor(shape, std::move(a));
    out.view_b = Tensor(shape, std::move(b));
    return out;
}

}  // namespace sclr
