/* Input functions answered from the enumeration. Kept apart from <stdio.h>,
   whose declarations would clash with these definitions. */
#include <stdarg.h>

long __enum_choose(long lo, long hi);
int nondet_int(void);
char nondet_char(void);

static int fill(const char *fmt, va_list ap)
{
    int assigned = 0;
    for (const char *p = fmt; *p; p++) {
        if (*p != '%')
            continue;
        p++;
        if (*p == '%')
            continue;
        int suppress = 0;
        if (*p == '*') {
            suppress = 1;
            p++;
        }
        while (*p >= '0' && *p <= '9')
            p++;
        int len = 0; /* -2 hh, -1 h, 1 l, 2 ll */
        if (*p == 'h') { len = -1; p++; if (*p == 'h') { len = -2; p++; } }
        else if (*p == 'l') { len = 1; p++; if (*p == 'l') { len = 2; p++; } }
        else if (*p == 'z' || *p == 'j' || *p == 't' || *p == 'L') { len = 1; p++; }
        if (!*p)
            break;
        char conv = *p;
        if (suppress)
            continue;
        switch (conv) {
        case 'd': case 'i': case 'u': case 'x': case 'X': case 'o': {
            long v = nondet_int();
            if (conv != 'd' && conv != 'i' && v < 0)
                v = 0;
            if (len == -2) *va_arg(ap, signed char *) = (signed char)v;
            else if (len == -1) *va_arg(ap, short *) = (short)v;
            else if (len == 1) *va_arg(ap, long *) = v;
            else if (len == 2) *va_arg(ap, long long *) = v;
            else *va_arg(ap, int *) = (int)v;
            break;
        }
        case 'c':
            *va_arg(ap, char *) = nondet_char();
            break;
        case 'f': case 'e': case 'g': case 'a': {
            long v = nondet_int();
            if (len >= 1) *va_arg(ap, double *) = (double)v;
            else *va_arg(ap, float *) = (float)v;
            break;
        }
        case 's':
            *va_arg(ap, char *) = 0;
            break;
        default:
            continue;
        }
        assigned++;
    }
    return assigned;
}

int scanf(const char *fmt, ...)
{
    va_list ap;
    va_start(ap, fmt);
    int n = fill(fmt, ap);
    va_end(ap);
    return n;
}

int __isoc99_scanf(const char *fmt, ...)
{
    va_list ap;
    va_start(ap, fmt);
    int n = fill(fmt, ap);
    va_end(ap);
    return n;
}
