// Copyright 2026 The LGSO Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/* The public header must compile as C. */
#include <stdio.h>

#include "lgso/lgso.h"

int main(void) {
  lgso_config* config = NULL;
  if (lgso_config_parse("problem = three_hump\n", &config) != LGSO_OK) {
    fprintf(stderr, "%s\n", lgso_last_error());
    return 1;
  }
  uint64_t hash = 0;
  lgso_config_hash(config, &hash);
  lgso_config_free(config);
  printf("lgso %s, %zu problems\n", lgso_version(), lgso_problem_count());
  return lgso_problem_count() == 5 ? 0 : 1;
}
