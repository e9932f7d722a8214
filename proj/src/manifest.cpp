#include "proact/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "proact/rng.hpp"

namespace proact {

std::string digest_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot digest missing file: " + path.string());
    std::uint64_t h = 1469598103934665603ull;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
        if (got < static_cast<std::streamsize>(sizeof(buf)))
            break;
    }
    char hex[24];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

void write_manifest(const RunManifest &m, const std::filesystem::path &path) {
    nlohmann::json j;
    j["subcommand"] = m.subcommand;
    j["tool_version"] = m.tool_version;
    j["seed"] = m.seed;
    j["config_path"] = m.config_path;
    j["config_digest"] = m.config_digest;
    j["input_digests"] = m.input_digests;
    j["outputs"] = m.outputs;
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write manifest: " + path.string());
    out << j.dump(1) << '\n';
}

DirectoryLock::DirectoryLock(const std::filesystem::path &dir) {
    std::filesystem::create_directories(dir);
    lock_file_ = dir / ".proact.lock";
    if (std::filesystem::exists(lock_file_))
        throw std::runtime_error("state directory is locked by another run: " +
                                 lock_file_.string());
    std::ofstream out(lock_file_);
    out << "locked\n";
}

DirectoryLock::~DirectoryLock() {
    std::error_code ec;
    std::filesystem::remove(lock_file_, ec);
}

} // namespace proact
