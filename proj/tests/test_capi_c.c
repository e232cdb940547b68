/* The public header must compile as C. */
#include <stdio.h>

#include "sdgl/sdgl.h"

int main(void) {
  sdgl_synth_spec spec;
  sdgl_synth* s = NULL;
  size_t steps = 0, nodes = 0;
  sdgl_synth_spec_default(&spec);
  spec.nodes = 3;
  if (sdgl_synth_generate(&spec, 50, 1, &s) != SDGL_OK) {
    fprintf(stderr, "%s\n", sdgl_last_error());
    return 1;
  }
  if (sdgl_dataset_shape(sdgl_synth_dataset(s), &steps, &nodes) != SDGL_OK) return 1;
  sdgl_synth_free(s);
  if (steps != 50 || nodes != 3) return 1;
  if (sdgl_window_count(100, 12, 12) != 77) return 1;
  puts("ok");
  return 0;
}
