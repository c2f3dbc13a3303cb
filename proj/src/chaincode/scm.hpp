#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "chaincode/chaincode.hpp"

// Supply chain management application. Values are a canonical
// human-readable text form: "field=value" pairs joined by ';' with fields
// in a fixed order. Key layout under namespace "scm":
//   V/{id}                vendor
//   P/{id}                product
//   C/{id}                contract
//   O/{id}                order
//   I/{vendor}/{product}  inventory
//   OIDX/{vendor}/{side}  space-separated order ids, side in {buy, sell}
//   VIDX                  space-separated vendor ids

namespace brook::scm {

constexpr const char* kChaincodeId = "scm";
constexpr int64_t kDayNs = 86'400'000'000'000;
constexpr size_t kDemandWindowOrders = 1000;

enum class OrderStatus { kPlaced, kShipped, kDelivered };

const char* to_string(OrderStatus s);
bool parse_status(const std::string& s, OrderStatus& out);

struct Contract {
    std::string id;
    std::string buyer;
    std::string seller;
    std::string product;
};

struct Order {
    std::string id;
    std::string contract;
    std::string buyer;
    std::string seller;
    std::string product;
    int64_t quantity = 0;
    OrderStatus status = OrderStatus::kPlaced;
    int64_t ts = 0;
};

std::string encode_contract(const Contract& c);
bool decode_contract(const std::string& text, Contract& out);
std::string encode_order(const Order& o);
bool decode_order(const std::string& text, Order& out);

Key vendor_key(const std::string& id);
Key product_key(const std::string& id);
Key contract_key(const std::string& id);
Key order_key(const std::string& id);
Key inventory_key(const std::string& vendor, const std::string& product);
Key order_index_key(const std::string& vendor, const std::string& side);
Key vendor_index_key();

std::vector<std::string> split_ids(const std::string& text);
std::string join_ids(const std::vector<std::string>& ids);

// Population coefficient of variation; defined iff values are non-empty
// with a positive mean.
bool coefficient_of_variation(const std::vector<int64_t>& values, double& out);

// mean over vendors of cv(out-quantities)/cv(in-quantities), vendors with
// undefined or zero cv_in excluded; false when no vendor qualifies.
bool bullwhip_from_orders(const std::vector<Order>& orders,
                          const std::vector<std::string>& vendors, double& out);

// inventory / mean daily demand over the trailing window of sell-side
// orders for the product; false only when inputs are malformed. Zero
// demand yields the infinite-supply sentinel (infinity).
double days_of_supply_from_orders(int64_t inventory, const std::vector<Order>& window);

}  // namespace brook::scm
