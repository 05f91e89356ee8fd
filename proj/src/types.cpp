#include "nfisac/types.hpp"

namespace nfisac {

std::string_view to_string(Role role) { return role == Role::Comm ? "comm" : "radar"; }

Role role_from_string(std::string_view s) {
    if (s == "comm" || s == "communication") return Role::Comm;
    if (s == "radar") return Role::Radar;
    throw std::invalid_argument("unknown role '" + std::string(s) + "'");
}

}  // namespace nfisac
