#include <stdio.h>
#include <string.h>
#include "kdgraph.h"

int main(void) {
    KdgSession *s = kdg_session_new();
    const char *kb =
        "has(e, superclass, event).\n"
        "has(p1, instance_of, e).\n"
        "has(a1, instance_of, e).\n"
        "has(b1, instance_of, e).\n"
        "has(p1, subevent, a1).\n"
        "has(p1, subevent, b1).\n"
        "has(a1, next_event, b1).\n";
    if (kdg_load_facts(s, kb, "client") != KDG_STATUS_OK) return 1;
    if (kdg_analyze(s, NULL) != KDG_STATUS_OK) return 2;
    char *facts = NULL;
    if (kdg_derived_facts(s, false, &facts) != KDG_STATUS_OK) return 3;
    int ok = strstr(facts, "has(p1, first_subevent, a1).") != NULL;
    kdg_string_free(facts);
    if (kdg_load_facts(s, "has(x", NULL) != KDG_STATUS_PARSE) return 4;
    if (kdg_last_error_message(s) == NULL) return 5;
    kdg_session_free(s);
    printf("%s %s\n", kdg_version(), ok ? "ok" : "missing");
    return ok ? 0 : 6;
}
