#include "bench/workload.hpp"

#include <algorithm>
#include <cmath>
#include <cassert>
#include <random>
#include <set>

#include "common/sha256.hpp"

namespace brook {

namespace {

uint64_t stream_seed(uint64_t seed, uint32_t client_id, const char* tag) {
    Bytes material = to_bytes(tag);
    for (int i = 0; i < 8; ++i) material.push_back(static_cast<uint8_t>(seed >> (8 * i)));
    for (int i = 0; i < 4; ++i) material.push_back(static_cast<uint8_t>(client_id >> (8 * i)));
    Hash32 h = sha256(material);
    uint64_t out = 0;
    for (int i = 0; i < 8; ++i) out |= static_cast<uint64_t>(h[i]) << (8 * i);
    return out;
}

Bytes make_value(std::mt19937_64& rng, size_t size) {
    Bytes v(size);
    uint8_t base = static_cast<uint8_t>(rng());
    for (size_t i = 0; i < size; ++i) v[i] = static_cast<uint8_t>(base + i * 31);
    return v;
}

std::string ycsb_key(uint64_t index) { return "user" + std::to_string(index); }

class YcsbGenerator : public OpGenerator {
  public:
    YcsbGenerator(const WorkloadSpec& spec, uint32_t client_id)
        : spec_(spec), rng_(stream_seed(spec.seed, client_id, "ycsb")) {
        working_keys_ = std::max<uint64_t>(
            1, static_cast<uint64_t>(spec.key_space * spec.working_set_fraction));
        write_op_ = spec.kind == WorkloadKind::kYcsb90 ? "insert" : "update";
        writes_per_window_ = spec.kind == WorkloadKind::kYcsb90 ? 90 : 50;
        if (spec.zipf_theta > 0) {
            zipf_cdf_.resize(working_keys_);
            double acc = 0;
            for (uint64_t i = 0; i < working_keys_; ++i) {
                acc += 1.0 / std::pow(static_cast<double>(i + 1), spec.zipf_theta);
                zipf_cdf_[i] = acc;
            }
            for (auto& c : zipf_cdf_) c /= acc;
        }
    }

    GenOp next() override {
        if (window_.empty()) refill();
        bool is_write = window_.back();
        window_.pop_back();

        GenOp op;
        uint64_t key_index = pick_key();
        op.proposal.chaincode_id = "kv";
        op.proposal.args.push_back(to_bytes(ycsb_key(key_index)));
        if (is_write) {
            op.op_type = write_op_;
            op.proposal.function = write_op_;
            op.proposal.args.push_back(make_value(rng_, spec_.value_size));
        } else {
            op.op_type = "read";
            op.proposal.function = "read";
        }
        return op;
    }

  private:
    void refill() {
        window_.assign(100, false);
        for (int i = 0; i < writes_per_window_; ++i) window_[i] = true;
        std::shuffle(window_.begin(), window_.end(), rng_);
    }

    uint64_t pick_key() {
        if (zipf_cdf_.empty()) return rng_() % working_keys_;
        // Zipf-distributed rank via inverse CDF, scattered across the key
        // range so the hot keys are not physically adjacent.
        double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
        auto it = std::lower_bound(zipf_cdf_.begin(), zipf_cdf_.end(), u);
        uint64_t rank = static_cast<uint64_t>(it - zipf_cdf_.begin());
        return (rank * 2654435761ull) % working_keys_;
    }

    WorkloadSpec spec_;
    std::mt19937_64 rng_;
    uint64_t working_keys_;
    std::string write_op_;
    int writes_per_window_;
    std::vector<bool> window_;
    std::vector<double> zipf_cdf_;
};

enum class ScmOp : uint8_t { kPlace, kUpdate, kCreate, kDaysOfSupply, kBullwhip };

class ScmGenerator : public OpGenerator {
  public:
    ScmGenerator(const WorkloadSpec& spec, uint32_t client_id)
        : spec_(spec),
          client_id_(client_id),
          rng_(stream_seed(spec.seed, client_id, "scm")),
          contracts_(scm_contract_table(spec)) {
        analytics_per_window_ = spec.kind == WorkloadKind::kScm95 ? 5 : 1;
    }

    GenOp next() override {
        if (window_.empty()) refill();
        ScmOp kind = window_.back();
        window_.pop_back();
        if (kind == ScmOp::kUpdate && pending_.empty()) kind = ScmOp::kPlace;

        GenOp op;
        op.proposal.chaincode_id = scm::kChaincodeId;
        switch (kind) {
            case ScmOp::kPlace: {
                size_t ci = rng_() % contracts_.size();
                std::string oid =
                    "o" + std::to_string(client_id_) + "x" + std::to_string(counter_++);
                int64_t qty = 1 + static_cast<int64_t>(rng_() % 5);
                int64_t ts = static_cast<int64_t>(placed_++) * (scm::kDayNs / 4);
                op.op_type = "place_order";
                op.proposal.function = "place_order";
                op.proposal.args = {to_bytes(oid), to_bytes(contracts_[ci].id),
                                    to_bytes(std::to_string(qty)),
                                    to_bytes(std::to_string(ts))};
                pending_.emplace_back(oid, scm::OrderStatus::kShipped);
                break;
            }
            case ScmOp::kUpdate: {
                auto [oid, next_status] = pending_.front();
                pending_.pop_front();
                op.op_type = "update_order";
                op.proposal.function = "update_order";
                op.proposal.args = {to_bytes(oid), to_bytes(scm::to_string(next_status))};
                if (next_status == scm::OrderStatus::kShipped)
                    pending_.emplace_back(oid, scm::OrderStatus::kDelivered);
                break;
            }
            case ScmOp::kCreate: {
                std::string cid =
                    "c" + std::to_string(client_id_) + "x" + std::to_string(counter_++);
                uint32_t buyer = rng_() % spec_.vendors;
                uint32_t seller = (buyer + 1 + rng_() % (spec_.vendors - 1)) % spec_.vendors;
                uint32_t product = rng_() % spec_.products;
                op.op_type = "create_contract";
                op.proposal.function = "create_contract";
                op.proposal.args = {to_bytes(cid), to_bytes("v" + std::to_string(buyer)),
                                    to_bytes("v" + std::to_string(seller)),
                                    to_bytes("p" + std::to_string(product))};
                break;
            }
            case ScmOp::kDaysOfSupply: {
                const auto& c = contracts_[rng_() % contracts_.size()];
                op.op_type = "days_of_supply";
                op.proposal.function = "days_of_supply";
                op.proposal.args = {to_bytes(c.seller), to_bytes(c.product)};
                break;
            }
            case ScmOp::kBullwhip:
                op.op_type = "bullwhip";
                op.proposal.function = "bullwhip";
                break;
        }
        return op;
    }

  private:
    void refill() {
        window_.clear();
        for (int i = 0; i < analytics_per_window_; ++i)
            window_.push_back(i % 2 == 0 ? ScmOp::kDaysOfSupply : ScmOp::kBullwhip);
        int tx_ops = 100 - analytics_per_window_;
        int creates = 3;
        int updates = tx_ops / 4;
        for (int i = 0; i < creates; ++i) window_.push_back(ScmOp::kCreate);
        for (int i = 0; i < updates; ++i) window_.push_back(ScmOp::kUpdate);
        while (window_.size() < 100) window_.push_back(ScmOp::kPlace);
        std::shuffle(window_.begin(), window_.end(), rng_);
    }

    WorkloadSpec spec_;
    uint32_t client_id_;
    std::mt19937_64 rng_;
    std::vector<scm::Contract> contracts_;
    int analytics_per_window_;
    std::vector<ScmOp> window_;
    std::deque<std::pair<std::string, scm::OrderStatus>> pending_;
    uint64_t counter_ = 0;
    uint64_t placed_ = 0;
};

}  // namespace

std::optional<WorkloadKind> parse_workload(const std::string& name) {
    if (name == "ycsb90") return WorkloadKind::kYcsb90;
    if (name == "ycsb50") return WorkloadKind::kYcsb50;
    if (name == "scm95") return WorkloadKind::kScm95;
    if (name == "scm99") return WorkloadKind::kScm99;
    return std::nullopt;
}

const char* to_string(WorkloadKind kind) {
    switch (kind) {
        case WorkloadKind::kYcsb90: return "ycsb90";
        case WorkloadKind::kYcsb50: return "ycsb50";
        case WorkloadKind::kScm95: return "scm95";
        case WorkloadKind::kScm99: return "scm99";
    }
    return "?";
}

bool is_scm(WorkloadKind kind) {
    return kind == WorkloadKind::kScm95 || kind == WorkloadKind::kScm99;
}

std::vector<scm::Contract> scm_contract_table(const WorkloadSpec& spec) {
    std::mt19937_64 rng(stream_seed(spec.seed, 0, "scm-bootstrap"));
    std::vector<scm::Contract> table;
    table.reserve(spec.contracts);
    for (uint32_t k = 0; k < spec.contracts; ++k) {
        uint32_t buyer = rng() % spec.vendors;
        uint32_t seller = (buyer + 1 + rng() % (spec.vendors - 1)) % spec.vendors;
        uint32_t product = rng() % spec.products;
        table.push_back({"c" + std::to_string(k), "v" + std::to_string(buyer),
                         "v" + std::to_string(seller), "p" + std::to_string(product)});
    }
    return table;
}

std::vector<Proposal> scm_bootstrap(const WorkloadSpec& spec) {
    std::vector<Proposal> props;
    auto add = [&](const std::string& fn, std::vector<std::string> args) {
        Proposal p;
        p.chaincode_id = scm::kChaincodeId;
        p.function = fn;
        for (auto& a : args) p.args.push_back(to_bytes(a));
        props.push_back(std::move(p));
    };

    for (uint32_t v = 0; v < spec.vendors; ++v)
        add("add_vendor", {"v" + std::to_string(v), "vendor " + std::to_string(v)});
    for (uint32_t p = 0; p < spec.products; ++p)
        add("add_product", {"p" + std::to_string(p), "product " + std::to_string(p)});

    auto table = scm_contract_table(spec);
    std::set<std::pair<std::string, std::string>> stocked;
    for (const auto& c : table)
        if (stocked.insert({c.seller, c.product}).second)
            add("init_inventory", {c.seller, c.product, "1000000000"});
    for (const auto& c : table) add("create_contract", {c.id, c.buyer, c.seller, c.product});
    return props;
}

std::vector<std::vector<Proposal>> scm_bootstrap_layers(const WorkloadSpec& spec) {
    auto flat = scm_bootstrap(spec);
    std::vector<std::vector<Proposal>> layers;
    size_t i = 0;
    for (; i < spec.vendors; ++i) layers.push_back({flat[i]});
    auto layer_of = [&](const char* fn) {
        std::vector<Proposal> layer;
        while (i < flat.size() && flat[i].function == fn) layer.push_back(flat[i++]);
        if (!layer.empty()) layers.push_back(std::move(layer));
    };
    layer_of("add_product");
    layer_of("init_inventory");
    layer_of("create_contract");
    return layers;
}

std::unique_ptr<OpGenerator> make_generator(const WorkloadSpec& spec, uint32_t client_id) {
    if (is_scm(spec.kind)) return std::make_unique<ScmGenerator>(spec, client_id);
    return std::make_unique<YcsbGenerator>(spec, client_id);
}

}  // namespace brook
