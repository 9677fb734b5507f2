/* Exercises the shared library through its C header only. */
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "ndharm/ndharm.h"

static int failures = 0;

#define EXPECT(cond)                                                  \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                     \
    }                                                                 \
  } while (0)

static const char* kConfig =
    "[domain]\nname = torus1d\npreset = coefficient-sine\nextents = 32\n"
    "[target]\nname = circle\n"
    "[initial]\npreset = perturbed-linear\nwinding = 1\nseed = 2\n"
    "[run]\nname = capi-small\nrecord_every = 20\n";

static void count_lines(const char* line, void* user) {
  (void)line;
  ++*(int*)user;
}

struct capture {
  char text[4096];
};

static void keep_lines(const char* line, void* user) {
  struct capture* c = (struct capture*)user;
  strncat(c->text, line, sizeof c->text - strlen(c->text) - 2);
  strcat(c->text, "\n");
}

int main(void) {
  ndh_experiment* exp = NULL;
  ndh_result* res = NULL;
  const char* name = NULL;
  ndh_verdict verdict;
  double value = 0.0;
  size_t needed = 0;
  int lines = 0;
  int code = -1;

  EXPECT(strlen(ndh_version()) > 0);
  EXPECT(strcmp(ndh_status_string(NDH_ERR_CONFIG), "") != 0);

  /* errors */
  EXPECT(ndh_experiment_from_text("[domain]\nname = nowhere\n[target]\nname = circle\n", &exp) == NDH_ERR_CONFIG);
  EXPECT(exp == NULL);
  EXPECT(strlen(ndh_last_error()) > 0);
  EXPECT(ndh_experiment_from_text(kConfig, NULL) == NDH_ERR_INVALID_ARGUMENT);
  EXPECT(ndh_experiment_from_scenario("no-such-scenario", &exp) == NDH_ERR_NOT_FOUND);
  EXPECT(ndh_experiment_from_file("/nonexistent/x.ini", &exp) == NDH_ERR_IO);
  EXPECT(ndh_experiment_run(NULL, &res) == NDH_ERR_INVALID_ARGUMENT);

  /* a full run without artifacts */
  EXPECT(ndh_experiment_from_text(kConfig, &exp) == NDH_OK);
  EXPECT(ndh_experiment_name(exp, &name) == NDH_OK && strcmp(name, "capi-small") == 0);
  EXPECT(ndh_experiment_set_output(exp, NULL) == NDH_OK);
  EXPECT(ndh_experiment_run(exp, &res) == NDH_OK);
  EXPECT(ndh_result_verdict(res, &verdict) == NDH_OK && verdict == NDH_VERDICT_CONVERGED);
  EXPECT(ndh_verdict_exit_code(verdict) == 0);
  EXPECT(strcmp(ndh_verdict_string(verdict), "converged") == 0);
  EXPECT(ndh_result_evidence(res, "final_sup_tension", &value) == NDH_OK && value < 1e-6);
  EXPECT(ndh_result_evidence(res, "steps", &value) == NDH_OK && value > 0);
  EXPECT(ndh_result_evidence(res, "no_such_key", &value) == NDH_ERR_NOT_FOUND);
  EXPECT(strcmp(ndh_result_output_dir(res), "") == 0);

  EXPECT(ndh_result_json(res, NULL, 0, &needed) == NDH_ERR_BUFFER_TOO_SMALL);
  EXPECT(needed > 2);
  {
    char* buf = (char*)malloc(needed);
    EXPECT(ndh_result_json(res, buf, needed, &needed) == NDH_OK);
    EXPECT(buf[0] == '{' && strstr(buf, "\"converged\"") != NULL);
    free(buf);
  }

  EXPECT(ndh_dump_operator(exp, count_lines, &lines) == NDH_OK);
  EXPECT(lines == 1 + 96);
  ndh_result_free(res);
  ndh_experiment_free(exp);
  ndh_result_free(NULL);
  ndh_experiment_free(NULL);

  /* scenario registry */
  EXPECT(ndh_scenario_count() >= 9);
  {
    const char *sname, *desc, *claim;
    ndh_verdict expected;
    size_t i;
    int found_circling = 0;
    for (i = 0; i < ndh_scenario_count(); ++i) {
      EXPECT(ndh_scenario_info(i, &sname, &desc, &claim, &expected) == NDH_OK);
      if (strcmp(sname, "hopf-circling") == 0) found_circling = expected == NDH_VERDICT_CIRCLING;
    }
    EXPECT(found_circling);
    EXPECT(ndh_scenario_info(ndh_scenario_count(), &sname, &desc, &claim, &expected) == NDH_ERR_NOT_FOUND);
  }

  /* verify with a filter that matches nothing */
  {
    struct capture c;
    c.text[0] = '\0';
    EXPECT(ndh_verify_goldens("no-such-scenario", NULL, keep_lines, &c, &code) == NDH_OK);
    EXPECT(code == 65);
    EXPECT(strstr(c.text, "no scenario matches") != NULL);
  }

  if (failures == 0) printf("capi: all checks passed\n");
  return failures == 0 ? 0 : 1;
}
