#pragma once

namespace dpl {

int displacementCost(int disp, int weight);
int detailedPlace(int max_displacement);
int dpMain(int max_displacement);
void registerDpl();

}  // namespace dpl
