#pragma once

#include <filesystem>
#include <string>

namespace acceptance {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Context {
  // Training runs write here; criterion 11 reads what criterion 8 left.
  std::filesystem::path work_dir;
};

Outcome half_oracle(const Context& ctx);
Outcome gradient_check(const Context& ctx);
Outcome lr_table(const Context& ctx);
Outcome speedup_table(const Context& ctx);
Outcome scaler_properties(const Context& ctx);
Outcome data_pipeline(const Context& ctx);
Outcome ddp_equivalence(const Context& ctx);
Outcome mixed_precision_parity(const Context& ctx);
Outcome large_batch_schedule(const Context& ctx);
Outcome transfer(const Context& ctx);
Outcome determinism(const Context& ctx);

}  // namespace acceptance
