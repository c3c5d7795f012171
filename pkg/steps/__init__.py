# Steps package

