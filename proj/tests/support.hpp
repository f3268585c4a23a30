#pragma once

// Small helpers shared by the test executables.

#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "reposim/backends.hpp"
#include "reposim/genmodel.hpp"
#include "reposim/repospec.hpp"
#include "reposim/taxonomy.hpp"

namespace testing_support {

namespace fs = std::filesystem;

inline fs::path source_dir() { return fs::path(REPOSIM_SOURCE_DIR); }

inline std::shared_ptr<reposim::Generator> stub_generator() {
    return std::make_shared<reposim::Generator>(std::make_shared<reposim::StubBackend>(),
                                                std::make_shared<reposim::ResponseCache>());
}

inline reposim::RepositorySpec build_spec(std::uint64_t seed, const reposim::BuildParams& params = {}) {
    auto gen = stub_generator();
    return reposim::build_repository_spec(seed, reposim::default_taxonomy(), params, *gen);
}

/// Specs with default parameters, built once per process.
inline std::shared_ptr<const reposim::RepositorySpec> shared_spec(std::uint64_t seed) {
    static std::mutex mu;
    static std::map<std::uint64_t, std::shared_ptr<const reposim::RepositorySpec>> specs;
    std::lock_guard lock(mu);
    auto& slot = specs[seed];
    if (!slot) slot = std::make_shared<const reposim::RepositorySpec>(build_spec(seed));
    return slot;
}

class TempDir {
public:
    TempDir() {
        std::string tmpl = (fs::temp_directory_path() / "reposim-test-XXXXXX").string();
        if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    fs::path path_;
};

}  // namespace testing_support
