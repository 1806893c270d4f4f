#include "torsotext/torsotext.hpp"
int main(){return 0;}
