#include <cstdio>
int main() { std::puts("snn_distill: not wired yet"); return 2; }
