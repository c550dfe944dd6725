#include "../dpl/Register.h"

namespace rsz {

int repairTiming(int max_passes)
{
  int passes = 0;
  while (passes < max_passes) {
    passes++;
  }
  return passes;
}

void registerRsz()
{
  register_cmd("repair_timing", repairTiming);
}

}  // namespace rsz
