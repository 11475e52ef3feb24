#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <sys/stat.h>

#include "biasforge/biasforge.h"

static int failures = 0;

#define CHECK(cond)                                                          \
  do {                                                                       \
    if (!(cond)) {                                                           \
      fprintf(stderr, "%s:%d: CHECK(%s) failed: %s\n", __FILE__, __LINE__, \
              #cond, bf_last_error());                                       \
      ++failures;                                                            \
    }                                                                        \
  } while (0)

static int file_exists(const char* dir, const char* name) {
  char path[1024];
  struct stat st;
  snprintf(path, sizeof path, "%s/%s", dir, name);
  return stat(path, &st) == 0;
}

int main(int argc, char** argv) {
  if (argc < 2) {
    fprintf(stderr, "usage: test_capi <scratch dir>\n");
    return 2;
  }
  const char* root = argv[1];
  char data[1024], out[1024], cfg[1024];
  snprintf(data, sizeof data, "%s/data", root);
  snprintf(out, sizeof out, "%s/cf", root);
  snprintf(cfg, sizeof cfg, "%s/world.json", root);
  mkdir(root, 0755);

  CHECK(strcmp(bf_version(), "0.1.0") == 0);

  bf_params* p = NULL;
  CHECK(bf_params_preset("nope", &p) == BF_ERR_CONFIG);
  CHECK(strlen(bf_last_error()) > 0);
  CHECK(bf_params_preset("table2-v1", &p) == BF_OK);
  double v = 0.0;
  CHECK(bf_params_get(p, "c_male", &v) == BF_OK && v == 0.2390);
  CHECK(bf_params_get(p, "beta.shoe_size", &v) == BF_ERR_CONFIG);
  CHECK(bf_params_set(p, "z", -1.0) == BF_ERR_CONFIG);

  const double s[4] = {3.0, 0.0, 0.9, 0.2};
  double post = 0.0;
  CHECK(bf_update_belief(p, 0.0, s, &post) == BF_OK);
  CHECK(fabs(post - 0.8530599377599275) < 1e-12);
  CHECK(bf_update_belief(NULL, 0.0, s, &post) == BF_ERR_CONFIG);

  char* json = NULL;
  CHECK(bf_params_to_json(p, &json) == BF_OK);
  bf_params* q = NULL;
  CHECK(bf_params_from_json(json, &q) == BF_OK);
  CHECK(bf_params_get(q, "beta_male", &v) == BF_OK && v == -0.1042);
  bf_string_free(json);
  bf_params_free(q);
  CHECK(bf_params_from_json("{not json", &q) == BF_ERR_CONFIG);

  bf_dataset* d = NULL;
  CHECK(bf_dataset_generate("{\"n_applicants\": 50}", &d) == BF_ERR_CONFIG);
  CHECK(bf_dataset_generate("{\"n_applicants\": 400, \"seed\": 3}", &d) == BF_OK);
  CHECK(bf_dataset_applicant_count(d) == 400);
  CHECK(bf_dataset_application_count(d) >= 400);
  CHECK(bf_dataset_save(d, data) == BF_OK);
  bf_dataset* e = NULL;
  CHECK(bf_dataset_load(data, &e) == BF_OK);
  CHECK(bf_dataset_application_count(e) == bf_dataset_application_count(d));
  CHECK(bf_dataset_load("/nonexistent/biasforge", &e) == BF_ERR_IO);

  char* report = NULL;
  CHECK(bf_scenario_report(d, p, "grid", &report) == BF_OK);
  CHECK(report && strstr(report, "\"both0\"") != NULL);
  bf_string_free(report);
  CHECK(bf_scenario_report(d, p, "sideways", &report) == BF_ERR_CONFIG);

  FILE* f = fopen(cfg, "w");
  fputs("{\"n_applicants\": 300, \"seed\": 5}", f);
  fclose(f);
  char gen[1024];
  snprintf(gen, sizeof gen, "%s/gen", root);
  bf_set_threads(2);
  CHECK(bf_run_generate(cfg, gen, 1, 9) == BF_OK);
  CHECK(file_exists(gen, "applicants.csv"));
  CHECK(file_exists(gen, "manifest.json"));
  CHECK(bf_run_counterfact(data, "/nonexistent/params.json", out, "grid", "expected", 0, 0) == BF_ERR_IO);
  bf_set_threads(0);

  bf_dataset_free(d);
  bf_dataset_free(e);
  bf_params_free(p);
  if (failures) fprintf(stderr, "%d failure(s)\n", failures);
  else printf("all C API checks passed\n");
  return failures ? 1 : 0;
}
