#include <assert.h>

#define LIMIT 3

int nondet_int(void);

int main(void) {
    int n = nondet_int();
    if (n < 0 || n > LIMIT) return 0;
    int pairs = 0;
    for (int i = 0; i < n; i++) {
        for (int j = i + 1; j < n; j++) {
            pairs++;
        }
    }
    assert(pairs == n * (n - 1) / 2);
    assert(pairs <= 3);
    assert(pairs != 3);
    return 0;
}
