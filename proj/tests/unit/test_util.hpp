#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "daamsep/dump_format.hpp"

namespace testutil {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("daamsep_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

// Dump with distinct (layer, timestep, head) triples and values in [0, 1].
inline daamsep::AttentionDump random_dump(std::mt19937_64& rng) {
    std::uniform_int_distribution<std::uint32_t> small(1, 6);
    std::uniform_real_distribution<float> unit(0.0f, 1.0f);
    daamsep::AttentionDump d;
    d.n_tokens = small(rng);
    d.seed = rng();
    d.model_id = "model-" + std::to_string(rng() % 1000);
    const std::uint32_t latent = small(rng) + 1;
    d.image_width = latent * small(rng);
    d.image_height = latent * small(rng);
    const std::uint32_t n_records = small(rng);
    for (std::uint32_t r = 0; r < n_records; ++r) {
        daamsep::AttentionRecord rec;
        rec.layer_id = r;
        rec.timestep = static_cast<std::uint32_t>(rng() % 50);
        rec.head = static_cast<std::uint32_t>(rng() % 8);
        rec.width = std::min<std::uint32_t>(latent, d.image_width);
        rec.height = std::min<std::uint32_t>(latent, d.image_height);
        rec.values.resize(static_cast<std::size_t>(rec.width) * rec.height * d.n_tokens);
        for (auto& v : rec.values) {
            v = unit(rng);
        }
        d.records.push_back(std::move(rec));
    }
    return d;
}

} // namespace testutil
