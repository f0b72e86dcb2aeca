#include "mrulab/tasks.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace mrulab {

Dataset gen_copy_first_input(Rng& rng, size_t n, size_t steps, double noise_sigma) {
    if (n < 1 || steps < 1) throw std::invalid_argument("gen_copy_first_input: n, T >= 1");
    Dataset ds;
    ds.x = Tensor({n, steps, 2});
    ds.y = Tensor({n, 1});
    for (size_t i = 0; i < n; ++i) {
        const float r1 = static_cast<float>(rng.normal());
        ds.x.at(i, 0, 0) = r1;
        ds.x.at(i, 0, 1) = 1.0f;  // flag only at the first timestep
        for (size_t t = 1; t < steps; ++t) {
            ds.x.at(i, t, 0) = static_cast<float>(noise_sigma * rng.normal());
            ds.x.at(i, t, 1) = 0.0f;
        }
        ds.y.at(i, 0) = r1;
    }
    return ds;
}

Dataset gen_binary_retention(Rng& rng, size_t n, size_t steps) {
    if (steps < 2) throw std::invalid_argument("gen_binary_retention: T >= 2");
    Dataset ds;
    ds.x = Tensor({n, steps, 1});
    ds.y = Tensor({n, 1});
    for (size_t i = 0; i < n; ++i) {
        const float v = rng.next_u64() & 1 ? 1.0f : -1.0f;
        ds.x.at(i, 0, 0) = v;
        ds.y.at(i, 0) = v;
    }
    return ds;
}

namespace {

uint32_t read_be32(std::ifstream& f, const std::string& path) {
    unsigned char buf[4];
    if (!f.read(reinterpret_cast<char*>(buf), 4)) {
        throw std::runtime_error("idx: truncated header in " + path);
    }
    return (uint32_t(buf[0]) << 24) | (uint32_t(buf[1]) << 16) |
           (uint32_t(buf[2]) << 8) | uint32_t(buf[3]);
}

}  // namespace

RawMnist load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream fi(images_path, std::ios::binary);
    if (!fi) throw std::runtime_error("idx: cannot open " + images_path);
    if (read_be32(fi, images_path) != 0x00000803u) {
        throw std::runtime_error("idx: bad image magic in " + images_path);
    }
    const uint32_t n = read_be32(fi, images_path);
    const uint32_t rows = read_be32(fi, images_path);
    const uint32_t cols = read_be32(fi, images_path);
    if (rows != 28 || cols != 28) {
        throw std::runtime_error("idx: expected 28x28 images in " + images_path);
    }
    RawMnist raw;
    raw.count = n;
    raw.images.resize(size_t(n) * 784);
    if (!fi.read(reinterpret_cast<char*>(raw.images.data()), raw.images.size())) {
        throw std::runtime_error("idx: truncated image data in " + images_path);
    }

    std::ifstream fl(labels_path, std::ios::binary);
    if (!fl) throw std::runtime_error("idx: cannot open " + labels_path);
    if (read_be32(fl, labels_path) != 0x00000801u) {
        throw std::runtime_error("idx: bad label magic in " + labels_path);
    }
    const uint32_t nl = read_be32(fl, labels_path);
    if (nl != n) {
        throw std::runtime_error("idx: image/label count mismatch (" +
                                 std::to_string(n) + " vs " + std::to_string(nl) + ")");
    }
    raw.labels.resize(nl);
    if (!fl.read(reinterpret_cast<char*>(raw.labels.data()), raw.labels.size())) {
        throw std::runtime_error("idx: truncated label data in " + labels_path);
    }
    for (uint8_t v : raw.labels) {
        if (v > 9) throw std::runtime_error("idx: label out of range in " + labels_path);
    }
    return raw;
}

Dataset make_permuted_padded(const RawMnist& raw, uint64_t perm_seed, size_t pad) {
    std::vector<size_t> perm(784);
    std::iota(perm.begin(), perm.end(), size_t{0});
    Rng rng = Rng(perm_seed).split(0);
    for (size_t i = 783; i > 0; --i) {
        const size_t j = rng.below(i + 1);
        std::swap(perm[i], perm[j]);
    }
    const size_t steps = 784 + pad;
    Dataset ds;
    ds.classification = true;
    ds.num_classes = 10;
    ds.x = Tensor({raw.count, steps, 1});
    ds.y = Tensor({raw.count, 1});
    for (size_t i = 0; i < raw.count; ++i) {
        const uint8_t* img = raw.images.data() + i * 784;
        for (size_t t = 0; t < 784; ++t) {
            const uint8_t p = img[perm[t]];
            ds.x.at(i, t, 0) = static_cast<float>(p) / 255.0f - 0.5f;
        }
        for (size_t t = 784; t < steps; ++t) {
            ds.x.at(i, t, 0) = 0.0f / 255.0f - 0.5f;  // raw black pixel
        }
        ds.y.at(i, 0) = static_cast<float>(raw.labels[i]);
    }
    return ds;
}

static Dataset take_rows(const Dataset& ds, const std::vector<size_t>& idx) {
    Dataset out;
    out.classification = ds.classification;
    out.num_classes = ds.num_classes;
    const size_t T = ds.steps(), F = ds.features(), yd = ds.y.dim(1);
    out.x = Tensor({idx.size(), T, F});
    out.y = Tensor({idx.size(), yd});
    for (size_t i = 0; i < idx.size(); ++i) {
        std::memcpy(out.x.data() + i * T * F, ds.x.data() + idx[i] * T * F,
                    T * F * sizeof(float));
        std::memcpy(out.y.data() + i * yd, ds.y.data() + idx[i] * yd,
                    yd * sizeof(float));
    }
    return out;
}

void split_dataset(const Dataset& full, double valid_fraction, Rng& rng,
                   Dataset* train, Dataset* valid) {
    const size_t n = full.size();
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), size_t{0});
    for (size_t i = n - 1; i > 0; --i) {
        const size_t j = rng.below(i + 1);
        std::swap(idx[i], idx[j]);
    }
    const size_t n_train = n - static_cast<size_t>(
        std::llround(static_cast<double>(n) * valid_fraction));
    *train = take_rows(full, {idx.begin(), idx.begin() + n_train});
    *valid = take_rows(full, {idx.begin() + n_train, idx.end()});
}

Dataset subset(const Dataset& ds, size_t count) {
    count = std::min(count, ds.size());
    std::vector<size_t> idx(count);
    std::iota(idx.begin(), idx.end(), size_t{0});
    return take_rows(ds, idx);
}

void save_dataset(const Dataset& ds, const std::string& dir,
                  const std::string& task, uint64_t seed) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::json manifest;
    manifest["version"] = 1;
    manifest["task"] = task;
    manifest["seed"] = seed;
    manifest["classification"] = ds.classification;
    manifest["num_classes"] = ds.num_classes;
    manifest["x_shape"] = ds.x.shape();
    manifest["y_shape"] = ds.y.shape();
    std::ofstream mf(dir + "/manifest.json");
    mf << manifest.dump(2) << "\n";
    for (const char* name : {"x", "y"}) {
        const Tensor& t = std::strcmp(name, "x") == 0 ? ds.x : ds.y;
        std::ofstream bf(dir + "/" + name + ".bin", std::ios::binary);
        bf.write(reinterpret_cast<const char*>(t.data()),
                 static_cast<std::streamsize>(t.size() * sizeof(float)));
    }
}

Dataset load_dataset(const std::string& dir) {
    std::ifstream mf(dir + "/manifest.json");
    if (!mf) throw std::runtime_error("load_dataset: missing manifest in " + dir);
    nlohmann::json manifest = nlohmann::json::parse(mf);
    Dataset ds;
    ds.classification = manifest.at("classification").get<bool>();
    ds.num_classes = manifest.at("num_classes").get<size_t>();
    auto read_tensor = [&](const std::string& name, const std::vector<size_t>& shape) {
        Tensor t(shape);
        std::ifstream bf(dir + "/" + name + ".bin", std::ios::binary);
        if (!bf.read(reinterpret_cast<char*>(t.data()),
                     static_cast<std::streamsize>(t.size() * sizeof(float)))) {
            throw std::runtime_error("load_dataset: truncated " + name + ".bin");
        }
        return t;
    };
    ds.x = read_tensor("x", manifest.at("x_shape").get<std::vector<size_t>>());
    ds.y = read_tensor("y", manifest.at("y_shape").get<std::vector<size_t>>());
    return ds;
}

}  // namespace mrulab
