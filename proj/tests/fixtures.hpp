#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "cbm/lts.hpp"
#include "cbm/mlts.hpp"

namespace cbmtest {

inline std::string fixture_path(const std::string& name) {
    return std::string(CBM_FIXTURE_DIR) + "/" + name;
}

inline std::string slurp(const std::string& name) {
    std::ifstream f(fixture_path(name));
    if (!f) throw std::runtime_error("missing fixture " + name);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

inline cbm::ProcessLts load_pqr() {
    return cbm::ProcessLts::load_merged({slurp("P.lts"), slurp("Q.lts"), slurp("R.lts")},
                                        {"P.lts", "Q.lts", "R.lts"});
}

inline cbm::Mlts load_v0(const cbm::ProcessLts& lts) {
    return cbm::Mlts::load_merged({slurp("S0.mlts"), slurp("Spp.mlts"), slurp("Mpar.mlts")},
                                  {"S0.mlts", "Spp.mlts", "Mpar.mlts"}, lts.quantale());
}

} // namespace cbmtest
