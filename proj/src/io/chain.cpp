#include "nsbi/io/chain.hpp"

namespace nsbi {

Table chain_table(const ChainRecord& chain, const std::vector<std::string>& names) {
  const Eigen::Index n = chain.thetas.rows();
  const Eigen::Index d = chain.thetas.cols();
  Table t;
  t.header.push_back("iteration");
  for (const auto& h : theta_header(static_cast<std::size_t>(d), names)) t.header.push_back(h);
  t.header.push_back("log_estimate");
  t.header.push_back("accepted");
  t.values.resize(n, d + 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    t.values(i, 0) = static_cast<double>(i + 1);
    t.values.row(i).segment(1, d) = chain.thetas.row(i);
    t.values(i, d + 1) = chain.log_target(i);
    t.values(i, d + 2) = static_cast<std::size_t>(i) < chain.accepted.size() && chain.accepted[i] ? 1.0 : 0.0;
  }
  return t;
}

}  // namespace nsbi
