#pragma once

#include <string>
#include <vector>

#include "nsbi/io/csv.hpp"
#include "nsbi/sampling/mh.hpp"

namespace nsbi {

/// Columns: iteration, one per parameter, log_estimate, accepted.
Table chain_table(const ChainRecord& chain, const std::vector<std::string>& names);

}  // namespace nsbi
