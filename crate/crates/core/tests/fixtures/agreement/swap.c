#include <assert.h>

int nondet_int(void);

void swap(int *a, int *b) {
    int t = *a;
    *a = *b;
    *b = t;
}

int main(void) {
    int x = nondet_int();
    int y = nondet_int();
    if (x < -3 || x > 3 || y < -3 || y > 3) return 0;
    int ox = x, oy = y;
    swap(&x, &y);
    assert(x == oy && y == ox);
    swap(&x, &y);
    assert(x == ox);
    assert(x <= y);
    return 0;
}
