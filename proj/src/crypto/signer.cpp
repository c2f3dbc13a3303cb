#include "crypto/signer.hpp"

#include <sodium.h>

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "common/sha256.hpp"

namespace brook {

namespace {

void init_sodium() {
    static const int rc = sodium_init();
    if (rc < 0) throw std::runtime_error("sodium_init failed");
}

constexpr uint8_t kNullSigMagic[8] = {'n', 'u', 'l', 'l', 's', 'i', 'g', '0'};

}  // namespace

KeyPair KeyPair::generate(uint64_t seed, const std::string& id) {
    init_sodium();
    Bytes seed_input;
    for (int i = 0; i < 8; ++i) seed_input.push_back(static_cast<uint8_t>(seed >> (8 * i)));
    append_bytes(seed_input, id.data(), id.size());
    Hash32 kp_seed = sha256(seed_input);

    KeyPair kp;
    kp.public_key.resize(crypto_sign_PUBLICKEYBYTES);
    kp.secret_key.resize(crypto_sign_SECRETKEYBYTES);
    crypto_sign_seed_keypair(kp.public_key.data(), kp.secret_key.data(), kp_seed.data());
    return kp;
}

Bytes sign(CryptoMode mode, const Bytes& secret_key, const Bytes& message) {
    init_sodium();
    Bytes sig(crypto_sign_BYTES);
    if (mode == CryptoMode::kNull) {
        std::memcpy(sig.data(), kNullSigMagic, sizeof(kNullSigMagic));
        return sig;
    }
    unsigned long long len = 0;
    crypto_sign_detached(sig.data(), &len, message.data(), message.size(), secret_key.data());
    sig.resize(len);
    return sig;
}

bool verify(CryptoMode mode, const Bytes& public_key, const Bytes& message, const Bytes& signature) {
    init_sodium();
    if (signature.size() != crypto_sign_BYTES) return false;
    if (mode == CryptoMode::kNull)
        return std::memcmp(signature.data(), kNullSigMagic, sizeof(kNullSigMagic)) == 0;
    if (public_key.size() != crypto_sign_PUBLICKEYBYTES) return false;
    return crypto_sign_verify_detached(signature.data(), message.data(), message.size(),
                                       public_key.data()) == 0;
}

void IdentityRoster::add(const std::string& id, Bytes public_key) {
    keys_[id] = std::move(public_key);
}

const Bytes* IdentityRoster::find(const std::string& id) const {
    auto it = keys_.find(id);
    return it == keys_.end() ? nullptr : &it->second;
}

void IdentityRoster::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("roster write failed: " + path.string());
    for (const auto& [id, key] : keys_) out << id << ' ' << to_hex(key) << '\n';
}

IdentityRoster IdentityRoster::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("roster open failed: " + path.string());
    IdentityRoster roster;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string id, hex;
        ls >> id >> hex;
        roster.add(id, from_hex(hex));
    }
    return roster;
}

}  // namespace brook
