#include "Opendp.h"

#include <cassert>

#include "Register.h"

namespace dpl {

int displacementCost(int disp, int weight = 8)
{
  assert(disp >= 0);
  return disp * weight;
}

int detailedPlace(int max_displacement)
{
  if (max_displacement < 1) {
    reportError("max_displacement must be positive");
  }
  int cost = 0;
  for (int i = 0; i < max_displacement; i++) {
    cost += displacementCost(i);
  }
  return cost;
}

int dpMain(int max_displacement)
{
  return detailedPlace(max_displacement);
}

void registerDpl()
{
  register_cmd("detailed_placement", dpMain);
}

}  // namespace dpl
