int strict_o3(int x);

int main(void) { return strict_o3(5) == 15 ? 0 : 1; }
