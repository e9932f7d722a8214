#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace proact {

inline constexpr const char *kToolVersion = "0.1.0";

// Every subcommand run leaves a manifest tying its outputs to the exact
// inputs: config digest, input file digests and the master seed. Identical
// manifests imply byte-identical artifacts.
struct RunManifest {
    std::string subcommand;
    std::string tool_version = kToolVersion;
    std::uint64_t seed = 0;
    std::string config_path;
    std::string config_digest; // fnv1a64 hex of the file bytes
    std::map<std::string, std::string> input_digests;
    std::vector<std::string> outputs;
};

std::string digest_file(const std::filesystem::path &path);
void write_manifest(const RunManifest &m, const std::filesystem::path &path);

// Single-writer guard for a state directory. Throws if the lock is already
// held; releases on destruction.
class DirectoryLock {
  public:
    explicit DirectoryLock(const std::filesystem::path &dir);
    ~DirectoryLock();
    DirectoryLock(const DirectoryLock &) = delete;
    DirectoryLock &operator=(const DirectoryLock &) = delete;

  private:
    std::filesystem::path lock_file_;
};

} // namespace proact
