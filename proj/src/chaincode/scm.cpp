#include "chaincode/scm.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

namespace brook::scm {

const char* to_string(OrderStatus s) {
    switch (s) {
        case OrderStatus::kPlaced: return "PLACED";
        case OrderStatus::kShipped: return "SHIPPED";
        case OrderStatus::kDelivered: return "DELIVERED";
    }
    return "?";
}

bool parse_status(const std::string& s, OrderStatus& out) {
    if (s == "PLACED") out = OrderStatus::kPlaced;
    else if (s == "SHIPPED") out = OrderStatus::kShipped;
    else if (s == "DELIVERED") out = OrderStatus::kDelivered;
    else return false;
    return true;
}

namespace {

std::map<std::string, std::string> parse_fields(const std::string& text) {
    std::map<std::string, std::string> fields;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ';')) {
        auto eq = item.find('=');
        if (eq == std::string::npos) continue;
        fields[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return fields;
}

std::string field_or(const std::map<std::string, std::string>& f, const char* name) {
    auto it = f.find(name);
    return it == f.end() ? std::string() : it->second;
}

}  // namespace

std::string encode_contract(const Contract& c) {
    return "id=" + c.id + ";buyer=" + c.buyer + ";seller=" + c.seller + ";product=" + c.product;
}

bool decode_contract(const std::string& text, Contract& out) {
    auto f = parse_fields(text);
    out.id = field_or(f, "id");
    out.buyer = field_or(f, "buyer");
    out.seller = field_or(f, "seller");
    out.product = field_or(f, "product");
    return !out.id.empty() && !out.buyer.empty() && !out.seller.empty() && !out.product.empty();
}

std::string encode_order(const Order& o) {
    return "id=" + o.id + ";contract=" + o.contract + ";buyer=" + o.buyer +
           ";seller=" + o.seller + ";product=" + o.product +
           ";qty=" + std::to_string(o.quantity) + ";status=" + to_string(o.status) +
           ";ts=" + std::to_string(o.ts);
}

bool decode_order(const std::string& text, Order& out) {
    auto f = parse_fields(text);
    out.id = field_or(f, "id");
    out.contract = field_or(f, "contract");
    out.buyer = field_or(f, "buyer");
    out.seller = field_or(f, "seller");
    out.product = field_or(f, "product");
    out.quantity = std::atoll(field_or(f, "qty").c_str());
    out.ts = std::atoll(field_or(f, "ts").c_str());
    return !out.id.empty() && parse_status(field_or(f, "status"), out.status);
}

Key vendor_key(const std::string& id) { return make_key(kChaincodeId, "V/" + id); }
Key product_key(const std::string& id) { return make_key(kChaincodeId, "P/" + id); }
Key contract_key(const std::string& id) { return make_key(kChaincodeId, "C/" + id); }
Key order_key(const std::string& id) { return make_key(kChaincodeId, "O/" + id); }
Key inventory_key(const std::string& vendor, const std::string& product) {
    return make_key(kChaincodeId, "I/" + vendor + "/" + product);
}
Key order_index_key(const std::string& vendor, const std::string& side) {
    return make_key(kChaincodeId, "OIDX/" + vendor + "/" + side);
}
Key vendor_index_key() { return make_key(kChaincodeId, "VIDX"); }

std::vector<std::string> split_ids(const std::string& text) {
    std::vector<std::string> ids;
    std::istringstream in(text);
    std::string id;
    while (in >> id) ids.push_back(id);
    return ids;
}

std::string join_ids(const std::vector<std::string>& ids) {
    std::string out;
    for (const auto& id : ids) {
        if (!out.empty()) out.push_back(' ');
        out += id;
    }
    return out;
}

bool coefficient_of_variation(const std::vector<int64_t>& values, double& out) {
    if (values.empty()) return false;
    double mean = 0;
    for (int64_t v : values) mean += static_cast<double>(v);
    mean /= static_cast<double>(values.size());
    if (mean <= 0) return false;
    double var = 0;
    for (int64_t v : values) {
        double d = static_cast<double>(v) - mean;
        var += d * d;
    }
    var /= static_cast<double>(values.size());
    out = std::sqrt(var) / mean;
    return true;
}

bool bullwhip_from_orders(const std::vector<Order>& orders,
                          const std::vector<std::string>& vendors, double& out) {
    double sum = 0;
    size_t defined = 0;
    for (const auto& v : vendors) {
        std::vector<int64_t> placed, received;
        for (const auto& o : orders) {
            if (o.buyer == v) placed.push_back(o.quantity);
            if (o.seller == v) received.push_back(o.quantity);
        }
        double cv_out = 0, cv_in = 0;
        if (!coefficient_of_variation(placed, cv_out)) continue;
        if (!coefficient_of_variation(received, cv_in)) continue;
        if (cv_in <= 0) continue;
        sum += cv_out / cv_in;
        ++defined;
    }
    if (defined == 0) return false;
    out = sum / static_cast<double>(defined);
    return true;
}

double days_of_supply_from_orders(int64_t inventory, const std::vector<Order>& window) {
    int64_t total = 0;
    int64_t min_ts = 0, max_ts = 0;
    bool first = true;
    for (const auto& o : window) {
        total += o.quantity;
        if (first || o.ts < min_ts) min_ts = o.ts;
        if (first || o.ts > max_ts) max_ts = o.ts;
        first = false;
    }
    if (total <= 0) return std::numeric_limits<double>::infinity();
    int64_t window_days = (max_ts - min_ts) / kDayNs + 1;
    double mean_daily = static_cast<double>(total) / static_cast<double>(window_days);
    return static_cast<double>(inventory) / mean_daily;
}

namespace {

class ScmChaincode : public Chaincode {
  public:
    const std::string& id() const override { return id_; }

    ExecResult invoke(const Proposal& p, TxSimulator& sim) override {
        const std::string& fn = p.function;
        if (fn == "add_vendor") return add_vendor(p, sim);
        if (fn == "add_product") return add_product(p, sim);
        if (fn == "init_inventory") return init_inventory(p, sim);
        if (fn == "create_contract") return create_contract(p, sim);
        if (fn == "place_order") return place_order(p, sim);
        if (fn == "update_order") return update_order(p, sim);
        if (fn == "days_of_supply") return days_of_supply(p, sim);
        if (fn == "bullwhip") return bullwhip(p, sim);
        return exec_failure("scm: unknown function " + fn);
    }

  private:
    static std::string arg(const Proposal& p, size_t i) {
        return i < p.args.size() ? brook::to_string(p.args[i]) : std::string();
    }

    static ExecResult ok_result(std::string text = {}) {
        ExecResult r;
        r.ok = true;
        r.result = to_bytes(text);
        return r;
    }

    ExecResult add_vendor(const Proposal& p, TxSimulator& sim) {
        std::string vid = arg(p, 0), name = arg(p, 1);
        if (vid.empty()) return exec_failure("scm: vendor id required");
        if (sim.read(vendor_key(vid))) return exec_failure("scm: duplicate vendor " + vid);
        sim.write(vendor_key(vid), to_bytes("id=" + vid + ";name=" + name));
        auto index = sim.read(vendor_index_key());
        auto ids = split_ids(index ? brook::to_string(*index) : "");
        ids.push_back(vid);
        sim.write(vendor_index_key(), to_bytes(join_ids(ids)));
        return ok_result();
    }

    ExecResult add_product(const Proposal& p, TxSimulator& sim) {
        std::string pid = arg(p, 0), name = arg(p, 1);
        if (pid.empty()) return exec_failure("scm: product id required");
        if (sim.read(product_key(pid))) return exec_failure("scm: duplicate product " + pid);
        sim.write(product_key(pid), to_bytes("id=" + pid + ";name=" + name));
        return ok_result();
    }

    ExecResult init_inventory(const Proposal& p, TxSimulator& sim) {
        std::string vid = arg(p, 0), pid = arg(p, 1);
        int64_t qty = std::atoll(arg(p, 2).c_str());
        if (qty < 0) return exec_failure("scm: negative inventory");
        if (!sim.read(vendor_key(vid))) return exec_failure("scm: no such vendor " + vid);
        if (!sim.read(product_key(pid))) return exec_failure("scm: no such product " + pid);
        sim.write(inventory_key(vid, pid), to_bytes(std::to_string(qty)));
        return ok_result();
    }

    ExecResult create_contract(const Proposal& p, TxSimulator& sim) {
        Contract c{arg(p, 0), arg(p, 1), arg(p, 2), arg(p, 3)};
        if (c.id.empty()) return exec_failure("scm: contract id required");
        if (c.buyer == c.seller) return exec_failure("scm: buyer equals seller");
        if (sim.read(contract_key(c.id))) return exec_failure("scm: duplicate contract " + c.id);
        if (!sim.read(vendor_key(c.buyer))) return exec_failure("scm: no such vendor " + c.buyer);
        if (!sim.read(vendor_key(c.seller))) return exec_failure("scm: no such vendor " + c.seller);
        if (!sim.read(product_key(c.product)))
            return exec_failure("scm: no such product " + c.product);
        sim.write(contract_key(c.id), to_bytes(encode_contract(c)));
        return ok_result();
    }

    // Decrements seller inventory at placement; that concentrates
    // contention on the inventory keys.
    ExecResult place_order(const Proposal& p, TxSimulator& sim) {
        std::string oid = arg(p, 0), cid = arg(p, 1);
        int64_t qty = std::atoll(arg(p, 2).c_str());
        int64_t ts = std::atoll(arg(p, 3).c_str());
        if (qty <= 0) return exec_failure("scm: quantity must be positive");
        auto contract_val = sim.read(contract_key(cid));
        if (!contract_val) return exec_failure("scm: no such contract " + cid);
        Contract c;
        if (!decode_contract(brook::to_string(*contract_val), c))
            return exec_failure("scm: malformed contract " + cid);
        if (sim.read(order_key(oid))) return exec_failure("scm: duplicate order " + oid);

        auto inv_val = sim.read(inventory_key(c.seller, c.product));
        int64_t inventory = inv_val ? std::atoll(brook::to_string(*inv_val).c_str()) : 0;
        if (inventory < qty) return exec_failure("scm: insufficient inventory");
        sim.write(inventory_key(c.seller, c.product), to_bytes(std::to_string(inventory - qty)));

        Order o{oid, cid, c.buyer, c.seller, c.product, qty, OrderStatus::kPlaced, ts};
        sim.write(order_key(oid), to_bytes(encode_order(o)));
        append_index(sim, c.seller, "sell", oid);
        append_index(sim, c.buyer, "buy", oid);
        return ok_result();
    }

    ExecResult update_order(const Proposal& p, TxSimulator& sim) {
        std::string oid = arg(p, 0), status_s = arg(p, 1);
        OrderStatus next;
        if (!parse_status(status_s, next)) return exec_failure("scm: bad status " + status_s);
        auto order_val = sim.read(order_key(oid));
        if (!order_val) return exec_failure("scm: no such order " + oid);
        Order o;
        if (!decode_order(brook::to_string(*order_val), o))
            return exec_failure("scm: malformed order " + oid);
        bool legal = (o.status == OrderStatus::kPlaced && next == OrderStatus::kShipped) ||
                     (o.status == OrderStatus::kShipped && next == OrderStatus::kDelivered);
        if (!legal)
            return exec_failure(std::string("scm: illegal transition ") + to_string(o.status) +
                                "->" + to_string(next));
        o.status = next;
        sim.write(order_key(oid), to_bytes(encode_order(o)));
        if (next == OrderStatus::kDelivered) {
            auto inv_val = sim.read(inventory_key(o.buyer, o.product));
            int64_t inventory = inv_val ? std::atoll(brook::to_string(*inv_val).c_str()) : 0;
            sim.write(inventory_key(o.buyer, o.product),
                      to_bytes(std::to_string(inventory + o.quantity)));
        }
        return ok_result();
    }

    ExecResult days_of_supply(const Proposal& p, TxSimulator& sim) {
        std::string vid = arg(p, 0), pid = arg(p, 1);
        if (!sim.read(vendor_key(vid))) return exec_failure("scm: no such vendor " + vid);
        if (!sim.read(product_key(pid))) return exec_failure("scm: no such product " + pid);
        auto inv_val = sim.read(inventory_key(vid, pid));
        int64_t inventory = inv_val ? std::atoll(brook::to_string(*inv_val).c_str()) : 0;

        auto index = sim.read(order_index_key(vid, "sell"));
        auto ids = split_ids(index ? brook::to_string(*index) : "");
        size_t start = ids.size() > kDemandWindowOrders ? ids.size() - kDemandWindowOrders : 0;
        std::vector<Order> window;
        for (size_t i = start; i < ids.size(); ++i) {
            auto val = sim.read(order_key(ids[i]));
            if (!val) continue;
            Order o;
            if (decode_order(brook::to_string(*val), o) && o.product == pid)
                window.push_back(std::move(o));
        }
        double days = days_of_supply_from_orders(inventory, window);
        char buf[64];
        if (std::isinf(days)) std::snprintf(buf, sizeof(buf), "inf");
        else std::snprintf(buf, sizeof(buf), "%.6f", days);
        return ok_result(buf);
    }

    // The large-read-set, high-contention query: scans every order on every
    // vendor's indexes.
    ExecResult bullwhip(const Proposal&, TxSimulator& sim) {
        auto vendor_index = sim.read(vendor_index_key());
        auto vendors = split_ids(vendor_index ? brook::to_string(*vendor_index) : "");
        std::vector<Order> orders;
        std::set<std::string> seen;
        for (const auto& v : vendors) {
            for (const char* side : {"buy", "sell"}) {
                auto index = sim.read(order_index_key(v, side));
                for (const auto& oid : split_ids(index ? brook::to_string(*index) : "")) {
                    if (!seen.insert(oid).second) continue;
                    auto val = sim.read(order_key(oid));
                    if (!val) continue;
                    Order o;
                    if (decode_order(brook::to_string(*val), o)) orders.push_back(std::move(o));
                }
            }
        }
        double coeff = 0;
        if (!bullwhip_from_orders(orders, vendors, coeff))
            return exec_failure("scm: bullwhip undefined (no qualifying vendor)");
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.6f", coeff);
        return ok_result(buf);
    }

    static void append_index(TxSimulator& sim, const std::string& vendor, const char* side,
                             const std::string& oid) {
        auto index = sim.read(order_index_key(vendor, side));
        auto ids = split_ids(index ? brook::to_string(*index) : "");
        ids.push_back(oid);
        sim.write(order_index_key(vendor, side), to_bytes(join_ids(ids)));
    }

    std::string id_ = kChaincodeId;
};

}  // namespace

}  // namespace brook::scm

namespace brook {
std::shared_ptr<Chaincode> make_scm_chaincode() {
    return std::make_shared<scm::ScmChaincode>();
}
}  // namespace brook
