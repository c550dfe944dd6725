#include "../dpl/Register.h"

namespace gpl {

double densityPenalty(double target_density, double overflow = 0.1)
{
  if (target_density <= 0.0 || target_density > 1.0) {
    reportError("target density out of range");
  }
  return overflow / target_density;
}

int globalPlace(int density_percent)
{
  double penalty = densityPenalty(density_percent / 100.0);
  return static_cast<int>(penalty * 1000);
}

void registerGpl()
{
  register_cmd("global_placement", globalPlace);
}

}  // namespace gpl
